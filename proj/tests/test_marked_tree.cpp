#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "gwwalk/marked_tree.hpp"

using namespace gwwalk;

namespace {

std::map<std::uint64_t, double> potentials_by_key(const MarkedTree& t, std::uint32_t max_depth) {
  std::map<std::uint64_t, double> out;
  for (NodeId x = 0; x < t.size(); ++x)
    if (t.depth(x) <= max_depth) out[t.node(x).key] = t.potential(x);
  return out;
}

double naive_h(const MarkedTree& t, NodeId x) {
  double h = 0.0;
  for (NodeId u : t.ancestors_inclusive(x)) h += std::exp(t.potential(u) - t.potential(x));
  return h;
}

}  // namespace

TEST(MarkedTree, EnvironmentIndependentOfExplorationOrder) {
  MarkLaw law = two_point_law(0.05);
  MarkedTree bfs(law, 42), dfs(law, 42);
  bfs.additive_martingale(5);
  std::vector<NodeId> stack{kRoot};
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    if (dfs.depth(x) >= 5) continue;
    auto kids = dfs.grow(x);
    for (NodeId c = kids.last; c-- > kids.first;) stack.push_back(c);
  }
  EXPECT_EQ(potentials_by_key(bfs, 5), potentials_by_key(dfs, 5));
  MarkedTree other(law, 43);
  other.additive_martingale(5);
  EXPECT_NE(potentials_by_key(bfs, 5), potentials_by_key(other, 5));
}

TEST(MarkedTree, PotentialIsSumOfMarks) {
  MarkedTree t(two_point_law(0.07), 7);
  t.additive_martingale(6);
  for (NodeId x = 1; x < t.size(); ++x)
    EXPECT_NEAR(t.potential(x) - t.potential(t.parent(x)), t.mark(x), 1e-12);
}

TEST(MarkedTree, TransitionWeightsFollowTheKernel) {
  MarkedTree t = MarkedTree::from_children({{0.5, -0.3, 2.0}});
  double z = 1.0 + std::exp(-0.5) + std::exp(0.3) + std::exp(-2.0);
  EXPECT_NEAR(t.prob_to_parent(kRoot), 1.0 / z, 1e-15);
  EXPECT_NEAR(t.prob_to_child(kRoot, 1), std::exp(0.3) / z, 1e-15);
  EXPECT_EQ(t.cumulative_weights(kRoot).back(), 1.0);
  EXPECT_EQ(t.prob_to_parent(1), 1.0);
}

TEST(MarkedTree, HxRecurrenceMatchesDefinition) {
  MarkedTree t(two_point_law(0.05), 3);
  t.additive_martingale(7);
  for (NodeId x = 0; x < t.size(); x += 3) EXPECT_NEAR(t.hx(x), naive_h(t, x), 1e-11 * naive_h(t, x));
  EXPECT_EQ(t.hx(kRoot), 1.0);
}

TEST(MarkedTree, FromChildrenNumbersBreadthFirst) {
  MarkedTree t = MarkedTree::from_children({{0.1, 0.2}, {0.3}, {}, {0.4}});
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t.parent(3), 1u);
  EXPECT_EQ(t.parent(4), 3u);
  EXPECT_NEAR(t.potential(4), 0.8, 1e-15);
  EXPECT_FALSE(t.is_lazy());
  EXPECT_EQ(t.grow(2).size(), 0u);
}

TEST(MarkedTree, TruncationKeepsGenerations) {
  MarkedTree t(two_point_law(0.05), 11);
  MarkedTree small = t.truncated(3);
  EXPECT_EQ(small.size(), 15u);
  for (NodeId x = 0; x < small.size(); ++x) EXPECT_LE(small.depth(x), 3u);
  EXPECT_NEAR(small.additive_martingale(3).value, t.additive_martingale(3).value, 1e-12);
}

// E[W_l] = 1 by the many-to-one identity with psi(1) = 0.
TEST(MarkedTree, AdditiveMartingaleHasUnitMean) {
  MarkLaw law = two_point_law(0.02);
  const int n = 4000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    MarkedTree t(law, 1000 + i);
    double w = t.additive_martingale(6).value;
    s += w;
    s2 += w * w;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0, 4.0 * se);
}

TEST(MarkedTree, PrunedProxyIsUnbiased) {
  MarkLaw law = two_point_law(0.02);
  const int n = 4000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    MarkedTree t(law, 5000 + i);
    double w = t.w_infinity_proxy(12, 1e-2);
    s += w;
    s2 += w * w;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0, 4.0 * se);
}

TEST(MarkedTree, RegularLineMatchesBruteForce) {
  MarkedTree t(two_point_law(0.05), 99);
  t.additive_martingale(6);
  const double lambda = 3.0, h = 0.5;
  auto line = t.regular_line(6, lambda, h);
  std::sort(line.begin(), line.end());
  std::vector<NodeId> brute;
  for (NodeId x = 1; x < t.size(); ++x) {
    if (t.depth(x) > 6) continue;
    bool ok = true;
    for (NodeId u : t.ancestors_inclusive(x))
      if (u != kRoot && (naive_h(t, u) > lambda || t.potential(u) < -h)) ok = false;
    if (ok) brute.push_back(x);
  }
  EXPECT_EQ(line, brute);
}

TEST(MarkedTree, SupercriticalTreeSurvives) {
  MarkedTree t(two_point_law(0.05), 1);
  EXPECT_TRUE(t.survives_to(50));
  MarkedTree leaf = MarkedTree::from_children({{0.0}});
  EXPECT_FALSE(leaf.survives_to(2));
}
