#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gwwalk/error.hpp"
#include "gwwalk/excursion.hpp"
#include "gwwalk/limit_laws.hpp"
#include "gwwalk/stats.hpp"

namespace gwwalk {

inline constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

/// Rooted tree with a positive integer type beta per vertex. Vertex 0 is the
/// root; children of a vertex are contiguous and ordered (left to right).
struct TypedTree {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> first_child;
  std::vector<std::uint32_t> n_children;
  std::vector<std::uint64_t> beta;

  std::size_t size() const noexcept { return beta.size(); }

  /// beta*(x) = beta(x) + sum of beta over the children of x.
  std::vector<std::uint64_t> beta_star() const {
    std::vector<std::uint64_t> out(beta);
    for (std::size_t x = 1; x < size(); ++x) out[parent[x]] += beta[x];
    return out;
  }

  /// G1(x): number of strict ancestors z of x (root included) with beta(z) = 1.
  std::vector<std::uint32_t> g1() const {
    std::vector<std::uint32_t> g(size(), 0);
    for (std::uint32_t x : dfs_order())
      for (std::uint32_t c = first_child[x]; c < first_child[x] + n_children[x]; ++c)
        g[c] = g[x] + (beta[x] == 1 ? 1 : 0);
    return g;
  }

  /// Depth-first (preorder) listing, children visited left to right.
  std::vector<std::uint32_t> dfs_order() const {
    std::vector<std::uint32_t> order, stack{0};
    order.reserve(size());
    while (!stack.empty()) {
      std::uint32_t x = stack.back();
      stack.pop_back();
      order.push_back(x);
      for (std::uint32_t c = first_child[x] + n_children[x]; c-- > first_child[x];) stack.push_back(c);
    }
    return order;
  }
};

/// Typed tree built from explicit parent links (parent[0] ignored). Children
/// keep the relative order of their ids.
inline TypedTree typed_tree_from_parents(const std::vector<std::uint32_t>& parents,
                                         const std::vector<std::uint64_t>& beta) {
  const std::size_t n = beta.size();
  if (parents.size() != n || n == 0) throw Error(ErrorCode::InvalidArgument, "parents and beta must match");
  std::vector<std::vector<std::uint32_t>> kids(n);
  for (std::uint32_t x = 1; x < n; ++x) {
    if (parents[x] >= n) throw Error(ErrorCode::InvalidArgument, "parent out of range");
    kids[parents[x]].push_back(x);
  }
  // Relabel breadth first so that siblings are contiguous.
  std::vector<std::uint32_t> order{0}, newid(n);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::uint32_t c : kids[order[i]]) order.push_back(c);
  if (order.size() != n) throw Error(ErrorCode::InvalidArgument, "parent links do not form a tree");
  for (std::uint32_t i = 0; i < n; ++i) newid[order[i]] = i;
  TypedTree t;
  t.parent.assign(n, kNoParent);
  t.first_child.assign(n, 0);
  t.n_children.assign(n, 0);
  t.beta.assign(n, 0);
  std::uint32_t next = 1;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t x = order[i];
    t.beta[i] = beta[x];
    t.first_child[i] = next;
    t.n_children[i] = static_cast<std::uint32_t>(kids[x].size());
    for (std::uint32_t c : kids[x]) t.parent[newid[c]] = i;
    next += t.n_children[i];
  }
  return t;
}

/// Excursion tree as a typed tree with beta = N (edge counts).
inline TypedTree typed_tree_from_excursion(const ExcursionTree& ex) {
  TypedTree t;
  const std::size_t n = ex.nodes.size();
  t.parent.resize(n);
  t.first_child.resize(n);
  t.n_children.resize(n);
  t.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.parent[i] = i == 0 ? kNoParent : ex.nodes[i].parent;
    t.first_child[i] = ex.nodes[i].first_child;
    t.n_children[i] = ex.nodes[i].n_children;
    t.beta[i] = ex.nodes[i].count;
  }
  return t;
}

/// Skeleton: vertex j (in depth-first order) sits at generation G1(u(j)) and
/// its parent is the last earlier vertex one generation up. Vertices with
/// beta != 1 become leaves of type (0, beta*), the others keep (1, beta*).
struct SkeletonTree {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> generation;
  std::vector<std::uint8_t> type1;
  std::vector<std::uint64_t> type2;
  std::vector<std::vector<std::uint32_t>> children;

  std::size_t size() const noexcept { return parent.size(); }
};

inline SkeletonTree skeletonize(const TypedTree& t) {
  const auto order = t.dfs_order();
  const auto g = t.g1();
  const auto bs = t.beta_star();
  SkeletonTree s;
  const std::size_t n = order.size();
  s.parent.assign(n, kNoParent);
  s.generation.resize(n);
  s.type1.resize(n);
  s.type2.resize(n);
  s.children.assign(n, {});
  // last_at[k]: most recent vertex at generation k.
  std::vector<std::uint32_t> last_at;
  for (std::uint32_t j = 0; j < n; ++j) {
    const std::uint32_t u = order[j];
    const std::uint32_t gen = g[u];
    s.generation[j] = gen;
    s.type1[j] = t.beta[u] == 1 ? 1 : 0;
    s.type2[j] = bs[u];
    if (gen > 0) {
      if (gen > last_at.size()) throw Error(ErrorCode::InvalidArgument, "generation sequence jumps");
      const std::uint32_t par = last_at[gen - 1];
      if (!s.type1[par]) throw Error(ErrorCode::InvalidArgument, "skeleton parent is a leaf");
      s.parent[j] = par;
      s.children[par].push_back(j);
    }
    last_at.resize(gen + 1);
    last_at[gen] = j;
  }
  return s;
}

/// Final binary-typed tree after leaf padding. Skeleton vertices keep their
/// indices; padding leaves (type 0) are appended after them.
struct FinalTree {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint8_t> type;
  std::vector<std::vector<std::uint32_t>> children;

  std::size_t size() const noexcept { return parent.size(); }
};

inline FinalTree finalize(const SkeletonTree& s) {
  FinalTree f;
  f.parent = s.parent;
  f.type = s.type1;
  f.children = s.children;
  auto add_leaves = [&](std::uint32_t under, std::uint64_t count) {
    for (std::uint64_t i = 0; i < count; ++i) {
      auto id = static_cast<std::uint32_t>(f.parent.size());
      f.parent.push_back(under);
      f.type.push_back(0);
      f.children.emplace_back();
      f.children[under].push_back(id);
    }
  };
  for (std::uint32_t x = 0; x < s.size(); ++x) {
    if (s.type1[x]) {
      add_leaves(x, s.type2[x] - 1);
    } else {
      if (s.parent[x] == kNoParent) throw Error(ErrorCode::InvalidArgument, "type-0 root");
      add_leaves(s.parent[x], s.type2[x] - 1);
    }
  }
  return f;
}

inline std::vector<std::uint32_t> dfs_order(const FinalTree& f) {
  std::vector<std::uint32_t> order, stack{0};
  while (!stack.empty()) {
    std::uint32_t x = stack.back();
    stack.pop_back();
    order.push_back(x);
    for (auto it = f.children[x].rbegin(); it != f.children[x].rend(); ++it) stack.push_back(*it);
  }
  return order;
}

/// Lukasiewicz data of a finite forest of final trees, indexed over the
/// type-1 vertices in depth-first order: N(j) all children, N1(j) type-1
/// children of the (j+1)-th type-1 vertex.
struct LukasiewiczPath {
  std::vector<std::int64_t> v1;   // V1(k), k = 0..K
  std::vector<std::uint64_t> d;   // D(k) = sum_{j<k} N(j), k = 0..K
  std::vector<std::uint64_t> f;   // F_p = #(first p final trees), p = 0..P
  std::vector<std::uint64_t> f1;  // #(type-1 vertices of the first p trees)

  std::size_t trees() const noexcept { return f.size() - 1; }
  std::size_t type1_count() const noexcept { return v1.size() - 1; }

  /// inf{k >= 1 : -V1(k) = p}; K + 1 when never reached.
  std::size_t first_passage(std::uint64_t p) const {
    for (std::size_t k = 1; k < v1.size(); ++k)
      if (-v1[k] == static_cast<std::int64_t>(p)) return k;
    return v1.size();
  }

  /// sup{k : D(k) <= m}; requires m < D(K).
  std::size_t d_bar(std::uint64_t m) const {
    auto it = std::upper_bound(d.begin(), d.end(), m);
    return static_cast<std::size_t>(it - d.begin()) - 1;
  }

  /// sup{p : F_p <= m}; requires m < F_P.
  std::size_t f_bar(std::uint64_t m) const {
    auto it = std::upper_bound(f.begin(), f.end(), m);
    return static_cast<std::size_t>(it - f.begin()) - 1;
  }

  /// max_{1<=k<=K} -V1(k), 0 over an empty range.
  std::int64_t max_neg_v1(std::size_t k_max) const {
    std::int64_t best = 0;
    for (std::size_t k = 1; k <= k_max && k < v1.size(); ++k) best = std::max(best, -v1[k]);
    return best;
  }
};

inline LukasiewiczPath lukasiewicz(const std::vector<FinalTree>& forest) {
  LukasiewiczPath path;
  path.v1.push_back(0);
  path.d.push_back(0);
  path.f.push_back(0);
  path.f1.push_back(0);
  for (const FinalTree& t : forest) {
    std::uint64_t ones = 0;
    for (std::uint32_t x : dfs_order(t)) {
      if (!t.type[x]) continue;
      std::int64_t n1 = 0;
      for (std::uint32_t c : t.children[x]) n1 += t.type[c];
      path.v1.push_back(path.v1.back() + n1 - 1);
      path.d.push_back(path.d.back() + t.children[x].size());
      ++ones;
    }
    path.f.push_back(path.f.back() + t.size());
    path.f1.push_back(path.f1.back() + ones);
  }
  return path;
}

inline void write_path_csv(std::ostream& os, const LukasiewiczPath& path) {
  os << "k,V1,D\n";
  for (std::size_t k = 0; k < path.v1.size(); ++k) os << k << ',' << path.v1[k] << ',' << path.d[k] << '\n';
}

/// Violation counts of every per-sample identity, over a forest.
struct ForestIdentityReport {
  std::size_t trees = 0;
  std::size_t skeleton_size = 0;        // #skeleton != #tree
  std::size_t skeleton_generation = 0;  // generation rule or parent rule
  std::size_t final_size = 0;           // #final != sum beta*
  std::size_t root_children = 0;        // N != 2 sum beta 1{G1=1}
  std::size_t type1_depth1 = 0;         // type-1 count at depth 1
  std::size_t forest_type = 0;          // F_p != p + D(#F1_p)
  std::size_t hitting = 0;              // #F1_p != inf{k: -V1_k = p}
  std::size_t sandwich = 0;
  std::size_t inverse_pair = 0;
  std::size_t increments = 0;
  std::size_t checks = 0;

  std::size_t violations() const {
    return skeleton_size + skeleton_generation + final_size + root_children + type1_depth1 + forest_type +
           hitting + sandwich + inverse_pair + increments;
  }
};

namespace detail {
// Parent in the skeleton as described directly: the deepest strict ancestor with beta = 1.
inline std::vector<std::uint32_t> naive_skeleton_parents(const TypedTree& t) {
  const auto order = t.dfs_order();
  std::vector<std::uint32_t> pos(t.size());
  for (std::uint32_t j = 0; j < order.size(); ++j) pos[order[j]] = j;
  std::vector<std::uint32_t> out(t.size(), kNoParent);
  for (std::uint32_t j = 1; j < order.size(); ++j) {
    std::uint32_t a = t.parent[order[j]];
    while (t.beta[a] != 1) a = t.parent[a];
    out[j] = pos[a];
  }
  return out;
}
}  // namespace detail

inline void check_tree_identities(const TypedTree& t, ForestIdentityReport& rep) {
  ++rep.trees;
  const SkeletonTree s = skeletonize(t);
  const FinalTree f = finalize(s);
  const auto bs = t.beta_star();
  const auto g = t.g1();
  const auto order = t.dfs_order();
  rep.checks += 5;
  if (s.size() != t.size()) ++rep.skeleton_size;
  bool gen_ok = true;
  for (std::uint32_t j = 0; j < order.size(); ++j) gen_ok = gen_ok && s.generation[j] == g[order[j]];
  gen_ok = gen_ok && detail::naive_skeleton_parents(t) == s.parent;
  if (!gen_ok) ++rep.skeleton_generation;
  std::uint64_t sum_bs = 0, nu = 0, h2 = 0;
  for (std::size_t x = 0; x < t.size(); ++x) {
    sum_bs += bs[x];
    if (g[x] == 1) {
      nu += t.beta[x];
      h2 += t.beta[x] == 1;
    }
  }
  if (f.size() != sum_bs) ++rep.final_size;
  if (f.children[0].size() != 2 * nu) ++rep.root_children;
  std::uint64_t depth1_type1 = 0;
  for (std::uint32_t c : f.children[0]) depth1_type1 += f.type[c];
  if (depth1_type1 != h2) ++rep.type1_depth1;
}

/// Forest-level identities on the first trees.size() trees.
inline ForestIdentityReport check_forest_identities(const std::vector<TypedTree>& trees) {
  ForestIdentityReport rep;
  std::vector<FinalTree> finals;
  std::vector<std::uint64_t> sum_bs;
  for (const auto& t : trees) {
    check_tree_identities(t, rep);
    finals.push_back(finalize(skeletonize(t)));
    std::uint64_t s = 0;
    for (auto b : t.beta_star()) s += b;
    sum_bs.push_back(s);
  }
  const LukasiewiczPath path = lukasiewicz(finals);
  const std::size_t P = trees.size();
  std::uint64_t fp = 0;
  for (std::size_t p = 1; p <= P; ++p) {
    fp += sum_bs[p - 1];
    rep.checks += 2;
    if (path.f[p] != fp || fp != p + path.d[path.f1[p]]) ++rep.forest_type;
    if (path.first_passage(p) != path.f1[p]) ++rep.hitting;
  }
  for (std::size_t k = 1; k < path.v1.size(); ++k) {
    ++rep.checks;
    if (path.v1[k] - path.v1[k - 1] < -1) ++rep.increments;
  }
  const std::uint64_t m_max = path.f.back() - P;  // = D(K)
  std::vector<std::uint64_t> ms;
  for (std::uint64_t m = 2; m < m_max; m = m < 64 ? m + 1 : m + m / 8) ms.push_back(m);
  for (std::uint64_t m : ms) {
    const auto fbar = static_cast<std::int64_t>(path.f_bar(m));
    const std::int64_t upper = path.max_neg_v1(path.d_bar(m));
    for (std::uint64_t gg : {std::uint64_t{1}, m / 2}) {
      if (gg == 0 || gg >= m) continue;
      ++rep.checks;
      const std::int64_t lower = std::min<std::int64_t>(static_cast<std::int64_t>(gg), path.max_neg_v1(path.d_bar(m - gg)));
      if (!(lower <= fbar && fbar <= upper)) ++rep.sandwich;
    }
    rep.checks += 1;
    if (path.d[path.d_bar(m)] > m) ++rep.inverse_pair;
  }
  for (std::size_t k = 0; k < path.d.size(); ++k) {
    if (path.d[k] >= m_max) break;
    ++rep.checks;
    if (path.d_bar(path.d[k]) < k) ++rep.inverse_pair;
  }
  return rep;
}

struct HypothesisReport {
  MeanSe h2;        // E[sum 1{G1=1, beta=1}], target 1
  MeanSe nu;        // E[sum beta 1{G1=1}]
  MeanSe nu_tilde;  // E[sum 1{G1=1}]
};

struct HypothesisSums {
  double h2 = 0, nu = 0, nu_tilde = 0;
};

/// Sums over vertices with G1 = 1; valid on trees explored only down to the
/// first beta = 1 vertex below the root.
inline HypothesisSums hypothesis_sums(const TypedTree& t) {
  HypothesisSums s;
  const auto g = t.g1();
  for (std::size_t x = 0; x < t.size(); ++x)
    if (g[x] == 1) {
      s.h2 += t.beta[x] == 1;
      s.nu += static_cast<double>(t.beta[x]);
      s.nu_tilde += 1;
    }
  return s;
}

inline HypothesisReport hypothesis_check(const std::function<TypedTree(std::size_t)>& source, std::size_t n) {
  std::vector<double> h2(n), nu(n), nt(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = hypothesis_sums(source(i));
    h2[i] = s.h2;
    nu[i] = s.nu;
    nt[i] = s.nu_tilde;
  }
  HypothesisReport rep;
  rep.h2 = mean_se(h2);
  rep.nu = mean_se(nu);
  rep.nu_tilde = mean_se(nt);
  return rep;
}

enum class ForestRegime { FiniteVariance, Critical, Stable };

/// Plug-in constants of the forest invariance principle. `spread` is
/// sigma_1^2 (FiniteVariance) or the tail constant c_gamma (Critical, Stable).
struct ForestScaling {
  ForestRegime regime = ForestRegime::FiniteVariance;
  double gamma = 2.0;
  double nu = 1.0;
  double spread = 1.0;

  double gamma_n(double n) const {
    switch (regime) {
      case ForestRegime::FiniteVariance: return std::sqrt(n);
      case ForestRegime::Critical: return std::sqrt(n * std::log(n));
      case ForestRegime::Stable: return std::pow(n, 1.0 / gamma);
    }
    return 0.0;
  }
  double law_gamma() const { return regime == ForestRegime::Stable ? gamma : 2.0; }
  /// F_{floor(alpha gamma_n)} / n -> hit_scale * tau_alpha.
  double hit_scale() const {
    if (regime == ForestRegime::Stable) return 2.0 * nu / (spread * std::abs(std::tgamma(1.0 - gamma)));
    return 2.0 * nu / spread;
  }
  /// Fbar(floor(t n)) / gamma_n -> sup_scale * S(t).
  double sup_scale() const { return std::pow(hit_scale(), -1.0 / law_gamma()); }
};

struct InvarianceRow {
  double n = 0.0;
  std::string functional;  // "F_alpha" or "Fbar_t"
  double lambda = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double reference = 0.0;
  double distance = 0.0;
  std::size_t trials = 0;
};

/// sum over the tree of beta*(x).
inline double forest_weight(const TypedTree& tr) {
  double b = 0.0;
  for (auto v : tr.beta) b += static_cast<double>(v);
  return 2.0 * b - static_cast<double>(tr.beta[0]);
}

/// Per-tree source for invariance_diag: source(trial, i, cap) returns the
/// beta*-weight of the i-th tree of the trial's forest, or any value above
/// cap once the weight is known to exceed it.
using ForestWeightSource = std::function<double(std::uint64_t, std::uint64_t, double)>;

/// Empirical Laplace transforms of F_{floor(alpha gamma_n)}/n and
/// Fbar(floor(t n))/gamma_n against the limit laws, for each n in the grid.
/// Forests are cut once F exceeds max(t n, 40 n / min lambda), beyond which
/// e^{-lambda F/n} is below e^{-40}.
inline std::vector<InvarianceRow> invariance_diag(const ForestWeightSource& source, const ForestScaling& sc,
                                                  const std::vector<double>& ns, std::size_t trials, double alpha,
                                                  double t, const std::vector<double>& lambdas) {
  const double g = sc.law_gamma();
  double lambda_min = kInf;
  for (double l : lambdas)
    if (l > 0.0) lambda_min = std::min(lambda_min, l);
  std::vector<InvarianceRow> rows;
  for (double n : ns) {
    const auto p = static_cast<std::uint64_t>(std::floor(alpha * sc.gamma_n(n)));
    const double m = std::floor(t * n);
    const double cap = std::max(m, std::isfinite(lambda_min) ? 40.0 * n / lambda_min : m) + 1.0;
    std::vector<double> fa(trials), fb(trials);
    for (std::size_t tr = 0; tr < trials; ++tr) {
      double total = 0.0, at_p = 0.0, bar = 0.0;
      std::uint64_t count = 0;
      bool have_bar = false;
      while ((count < p || !have_bar) && total <= cap) {
        total += source(tr, count, cap - total);
        ++count;
        if (count == p) at_p = total;
        if (!have_bar && total > m) {
          have_bar = true;
          bar = static_cast<double>(count - 1);
        }
      }
      if (count < p) at_p = total;
      fa[tr] = at_p / n;
      fb[tr] = bar / sc.gamma_n(n);
    }
    auto emit = [&](const std::vector<double>& x, const char* name, auto ref) {
      for (const auto& row : empirical_laplace(x, lambdas)) {
        InvarianceRow r;
        r.n = n;
        r.functional = name;
        r.lambda = row.lambda;
        r.empirical = row.value;
        r.se = row.se;
        r.reference = ref(row.lambda);
        r.distance = std::abs(r.empirical - r.reference);
        r.trials = trials;
        rows.push_back(r);
      }
    };
    emit(fa, "F_alpha", [&](double l) { return hit_laplace(g, alpha, sc.hit_scale() * l); });
    emit(fb, "Fbar_t", [&](double l) { return ml_laplace(g, sc.sup_scale() * std::pow(t, 1.0 / g) * l); });
  }
  return rows;
}

}  // namespace gwwalk
