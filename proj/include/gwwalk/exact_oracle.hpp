#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gwwalk/error.hpp"
#include "gwwalk/marked_tree.hpp"

namespace gwwalk {

inline constexpr std::size_t kOracleMaxStates = 5000;

/// The quenched chain on a finite, fully grown environment plus e*.
/// State 0 is e*, state x + 1 is tree node x.
class FiniteChain {
 public:
  explicit FiniteChain(const MarkedTree& tree) {
    const std::size_t n = tree.size();
    if (n + 1 > kOracleMaxStates) throw Error(ErrorCode::InvalidArgument, "environment too large for the oracle");
    for (NodeId x = 0; x < n; ++x)
      if (!tree.grown(x)) throw Error(ErrorCode::InvalidArgument, "oracle needs a fully grown environment");
    potential_.resize(n);
    parent_.resize(n);
    to_parent_.resize(n);
    rows_.resize(n + 1);
    rows_[0].push_back({1, 1.0});
    for (NodeId x = 0; x < n; ++x) {
      potential_[x] = tree.potential(x);
      parent_[x] = x == kRoot ? kEStar : tree.parent(x);
      to_parent_[x] = tree.prob_to_parent(x);
      rows_[x + 1].push_back({x == kRoot ? 0u : tree.parent(x) + 1u, tree.prob_to_parent(x)});
      const auto kids = tree.children(x);
      for (std::uint32_t i = 0; i < kids.size(); ++i) rows_[x + 1].push_back({kids.first + i + 1u, tree.prob_to_child(x, i)});
    }
  }

  struct Entry {
    std::uint32_t to;
    double p;
  };

  std::size_t states() const noexcept { return rows_.size(); }
  std::size_t nodes() const noexcept { return rows_.size() - 1; }
  const std::vector<Entry>& row(std::size_t s) const { return rows_[s]; }
  double potential(NodeId x) const { return potential_[x]; }
  NodeId parent(NodeId x) const { return parent_[x]; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(states(), states());
    for (std::size_t s = 0; s < states(); ++s)
      for (const auto& e : rows_[s]) p(s, e.to) += e.p;
    return p;
  }

  /// Green's matrix of the walk on the tree killed on reaching e*:
  /// G(x, y) = expected visits to y from x before absorption.
  const Eigen::MatrixXd& green() const {
    if (green_.size() == 0) {
      const auto n = static_cast<Eigen::Index>(nodes());
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
      for (std::size_t x = 0; x < nodes(); ++x)
        for (const auto& e : rows_[x + 1])
          if (e.to != 0) a(static_cast<Eigen::Index>(x), e.to - 1) -= e.p;
      green_ = a.partialPivLu().inverse();
    }
    return green_;
  }

  /// p(x*, x) for x != e; p(e*, e) = 1.
  double prob_down(NodeId x) const {
    if (x == kRoot) return 1.0;
    for (const auto& e : rows_[parent_[x] + 1])
      if (e.to == x + 1) return e.p;
    return 0.0;
  }

 private:
  std::vector<std::vector<Entry>> rows_;
  std::vector<double> potential_;
  std::vector<NodeId> parent_;
  std::vector<double> to_parent_;
  mutable Eigen::MatrixXd green_;
};

/// E[N_x^{tau^1}] per node, started from X_0 = e (the root edge counts the
/// closing e* -> e crossing).
inline std::vector<double> expected_edge_counts(const FiniteChain& c) {
  const auto& g = c.green();
  std::vector<double> out(c.nodes());
  out[kRoot] = 1.0;
  for (NodeId x = 1; x < c.nodes(); ++x) out[x] = g(0, c.parent(x)) * c.prob_down(x);
  return out;
}

/// E[N_x^{tau^1} N_y^{tau^1}] for all node pairs from the Green's matrix:
/// ordered pairs of crossings (s < t) contribute G(e, x*) p(x*,x) G(x, y*) p(y*,y).
inline Eigen::MatrixXd edge_count_second_moments(const FiniteChain& c) {
  const auto& g = c.green();
  const std::size_t n = c.nodes();
  std::vector<double> first(n);
  for (NodeId x = 0; x < n; ++x) first[x] = x == kRoot ? 1.0 : g(0, c.parent(x)) * c.prob_down(x);
  // h(z, y): expected y-crossings from z before absorption, y != e.
  auto h = [&](NodeId z, NodeId y) { return y == kRoot ? 0.0 : g(z, c.parent(y)) * c.prob_down(y); };
  Eigen::MatrixXd m(n, n);
  for (NodeId x = 0; x < n; ++x)
    for (NodeId y = 0; y < n; ++y) {
      double v = (x == y ? first[x] : 0.0);
      // The root crossing closes the excursion, so it is the last crossing.
      if (x == kRoot && y == kRoot) v = 1.0;
      else if (x == kRoot) v = first[y];
      else if (y == kRoot) v = first[x];
      else v += first[x] * h(x, y) + first[y] * h(y, x);
      m(x, y) = v;
    }
  return m;
}

/// P(T_x < tau^1) from X_0 = e, by solving for the harmonic function of the
/// chain absorbed at e* and at x.
inline double hitting_prob(const FiniteChain& c, NodeId x) {
  if (x == kRoot) return 1.0;
  const auto n = static_cast<Eigen::Index>(c.nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (std::size_t z = 0; z < c.nodes(); ++z) {
    if (z == x) {
      b(static_cast<Eigen::Index>(z)) = 1.0;
      continue;
    }
    for (const auto& e : c.row(z + 1))
      if (e.to != 0) a(static_cast<Eigen::Index>(z), e.to - 1) -= e.p;
  }
  Eigen::VectorXd h = a.partialPivLu().solve(b);
  return h(0);
}

/// E[tau^1] from X_0 = e: steps to reach e* plus the forced return step.
inline double expected_tau1(const FiniteChain& c) { return c.green().row(0).sum() + 1.0; }

/// Distribution of X_m from X_0 = e for m = 0..steps; invokes
/// on_step(m, dist) after every step.
template <class F>
void propagate(const FiniteChain& c, std::size_t steps, F&& on_step) {
  std::vector<double> cur(c.states(), 0.0), next(c.states());
  cur[kRoot + 1] = 1.0;
  for (std::size_t m = 1; m <= steps; ++m) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < c.states(); ++s)
      if (cur[s] != 0.0)
        for (const auto& e : c.row(s)) next[e.to] += cur[s] * e.p;
    cur.swap(next);
    on_step(m, cur);
  }
}

/// P(X_{2n+1} = e*) from X_0 = e.
inline double return_prob(const FiniteChain& c, std::size_t n) {
  double out = 0.0;
  propagate(c, 2 * n + 1, [&](std::size_t m, const std::vector<double>& d) {
    if (m == 2 * n + 1) out = d[0];
  });
  return out;
}

struct LemmaClosedForms {
  std::vector<double> first;    // e^{-V(x)}
  Eigen::MatrixXd second;       // E[N_x N_y]
  std::vector<double> hitting;  // e^{-V(x)} / H_x
};

/// Closed-form excursion moments of the edge local times on a finite tree.
inline LemmaClosedForms lemma_closed_forms(MarkedTree& t) {
  const std::size_t n = t.size();
  LemmaClosedForms out;
  out.first.resize(n);
  out.hitting.resize(n);
  out.second.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (NodeId x = 0; x < n; ++x) {
    out.first[x] = std::exp(-t.potential(x));
    out.hitting[x] = out.first[x] / t.hx(x);
  }
  for (NodeId x = 0; x < n; ++x)
    for (NodeId y = 0; y < n; ++y) {
      NodeId a = x, b = y;
      while (t.depth(a) > t.depth(b)) a = t.parent(a);
      while (t.depth(b) > t.depth(a)) b = t.parent(b);
      while (a != b) {
        a = t.parent(a);
        b = t.parent(b);
      }
      double v;
      if (a == x) v = std::exp(-t.potential(y)) * (2.0 * t.hx(x) - 1.0);
      else if (a == y) v = std::exp(-t.potential(x)) * (2.0 * t.hx(y) - 1.0);
      else v = 2.0 * t.hx(a) * std::exp(t.potential(a) - t.potential(x) - t.potential(y));
      out.second(x, y) = v;
    }
  return out;
}

}  // namespace gwwalk
