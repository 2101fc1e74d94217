#include <gtest/gtest.h>

#include <cmath>

#include "gwwalk/exact_oracle.hpp"
#include "gwwalk/stats.hpp"
#include "gwwalk/walk.hpp"

using namespace gwwalk;

namespace {

MarkedTree random_env(std::uint64_t seed, std::uint32_t depth) {
  MarkedTree t(two_point_law(0.05), seed);
  return t.truncated(depth);
}

NodeId meet(const MarkedTree& t, NodeId x, NodeId y) {
  while (t.depth(x) > t.depth(y)) x = t.parent(x);
  while (t.depth(y) > t.depth(x)) y = t.parent(y);
  while (x != y) {
    x = t.parent(x);
    y = t.parent(y);
  }
  return x;
}

bool is_ancestor(const MarkedTree& t, NodeId x, NodeId y) {
  while (t.depth(y) > t.depth(x)) y = t.parent(y);
  return x == y;
}

// Closed forms for E[N_x N_y] over one excursion.
double lemma_product(MarkedTree& t, NodeId x, NodeId y) {
  if (is_ancestor(t, y, x)) std::swap(x, y);
  if (is_ancestor(t, x, y)) return std::exp(-t.potential(y)) * (2.0 * t.hx(x) - 1.0);
  NodeId z = meet(t, x, y);
  return 2.0 * t.hx(z) * std::exp(t.potential(z) - t.potential(x) - t.potential(y));
}

}  // namespace

TEST(ExactOracle, SingleEdge) {
  for (double a : {-1.0, 0.0, 0.7}) {
    auto t = MarkedTree::from_children({{a}});
    FiniteChain c(t);
    auto n = expected_edge_counts(c);
    EXPECT_NEAR(n[1], std::exp(-a), 1e-12);
    EXPECT_NEAR(edge_count_second_moments(c)(1, 1), std::exp(-a) * (1.0 + 2.0 * std::exp(-a)), 1e-12);
  }
}

TEST(ExactOracle, FlatBinaryTree) {
  auto t = MarkedTree::from_children({{0, 0}, {0, 0}, {0, 0}});
  FiniteChain c(t);
  for (double v : expected_edge_counts(c)) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ExactOracle, RowsAreStochastic) {
  auto t = random_env(3, 4);
  FiniteChain c(t);
  for (std::size_t s = 0; s < c.states(); ++s) {
    double sum = 0.0;
    for (const auto& e : c.row(s)) sum += e.p;
    EXPECT_NEAR(sum, 1.0, 1e-13);
  }
  propagate(c, 200, [](std::size_t, const std::vector<double>& d) {
    double s = 0.0;
    for (double v : d) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  });
}

TEST(ExactOracle, LemmaClosedFormsOnRandomEnvironments) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto t = random_env(100 + seed, 1 + seed % 4);
    FiniteChain c(t);
    auto n = expected_edge_counts(c);
    auto m = edge_count_second_moments(c);
    for (NodeId x = 0; x < t.size(); ++x) {
      EXPECT_NEAR(n[x], std::exp(-t.potential(x)), 1e-10 * std::max(1.0, n[x]));
      if (x != kRoot) {
        EXPECT_NEAR(hitting_prob(c, x), std::exp(-t.potential(x)) / t.hx(x), 1e-12);
      }
      for (NodeId y = 0; y < t.size(); ++y) {
        double want = lemma_product(t, x, y);
        EXPECT_NEAR(m(x, y), want, 1e-10 * std::max(1.0, want)) << seed << ' ' << x << ' ' << y;
      }
    }
  }
}

TEST(ExactOracle, ExpectedTauMatchesWalk) {
  auto t = MarkedTree::from_children({{0, 0}, {0, 0}, {0, 0}});
  FiniteChain c(t);
  // Flat tree: E[steps from e to e*] = 2 * edges + 1 by the commute-time identity.
  EXPECT_NEAR(expected_tau1(c), 2.0 * 6 + 1 + 1, 1e-10);
  SplitMix64 g(5);
  WalkRecord r;
  const std::size_t p = 100'000;
  run_until_tau(t, r, p, g);
  std::vector<double> d(p);
  for (std::size_t j = 1; j <= p; ++j) d[j - 1] = static_cast<double>(r.tau[j] - r.tau[j - 1]);
  // Every excursion after the first starts at e at tau^{j-1}, so each gap is a copy of tau^1.
  MeanSe m = mean_se(d);
  EXPECT_LT(std::abs(m.mean - expected_tau1(c)), 4.0 * m.se);
}

TEST(ExactOracle, ReturnProbabilityMatchesWalkers) {
  auto t = random_env(7, 3);
  FiniteChain c(t);
  SplitMix64 g(9);
  const std::size_t walkers = 200'000;
  for (std::size_t n : {0u, 3u, 10u}) {
    double hits = 0.0;
    WalkRecord r;
    for (std::size_t w = 0; w < walkers; ++w) {
      r.reset();
      run_until_time(t, r, 2 * n + 1, g);
      hits += r.position == kEStar;
    }
    double p = return_prob(c, n), est = hits / walkers;
    double se = std::sqrt(p * (1.0 - p) / walkers);
    EXPECT_LT(std::abs(est - p), 4.0 * se + 1e-12) << n;
  }
}

TEST(ExactOracle, RejectsLazyEnvironment) {
  MarkedTree t(two_point_law(0.05), 1);
  EXPECT_THROW(FiniteChain{t}, Error);
}
