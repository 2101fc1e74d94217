#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "gwwalk/excursion.hpp"
#include "gwwalk/stats.hpp"

using namespace gwwalk;

TEST(ChildrenCounts, LeafHasNoChildren) {
  SplitMix64 g(1);
  std::vector<std::uint64_t> out;
  std::vector<double> probs{0.0, 0.0};
  sample_children_counts(5, 1.0, probs, g, out);
  EXPECT_EQ(out, (std::vector<std::uint64_t>{0, 0}));
}

TEST(ChildrenCounts, SingleChildIsGeometric) {
  const double pb = 0.4;
  SplitMix64 g(2);
  std::vector<double> hist(40, 0.0), probs(40);
  std::vector<std::uint64_t> out;
  std::vector<double> child{1.0 - pb};
  for (int i = 0; i < 1'000'000; ++i) {
    sample_children_counts(1, pb, child, g, out);
    if (out[0] < hist.size()) hist[out[0]] += 1;
  }
  for (std::size_t j = 0; j < probs.size(); ++j) probs[j] = pb * std::pow(1 - pb, static_cast<double>(j));
  auto chi = chi_square_gof(hist, probs);
  EXPECT_GT(chi.p_value, 1e-3) << chi.statistic << " dof " << chi.dof;
}

// Negative multinomial means: E[k_i] = k p_i / p_back.
TEST(ChildrenCounts, MeansMatchNegativeMultinomial) {
  const double pb = 0.3;
  std::vector<double> probs{0.5, 0.15, 0.05};
  for (std::uint64_t k : {1ULL, 3ULL, 64ULL, 65ULL, 400ULL}) {
    SplitMix64 g(k);
    const int n = 200000;
    std::vector<std::vector<double>> draws(3, std::vector<double>(n));
    std::vector<std::uint64_t> out;
    for (int i = 0; i < n; ++i) {
      sample_children_counts(k, pb, probs, g, out);
      for (int c = 0; c < 3; ++c) draws[c][i] = static_cast<double>(out[c]);
    }
    for (int c = 0; c < 3; ++c) {
      MeanSe m = mean_se(draws[c]);
      EXPECT_NEAR(m.mean, k * probs[c] / pb, 4 * m.se) << "k=" << k << " child " << c;
    }
  }
}

TEST(Excursion, StiffChainRarelyLeavesTheRoot) {
  const double a = 3.0;
  MarkedTree t = MarkedTree::from_children({{a}});
  SplitMix64 g(3);
  const int n = 100000;
  int stayed = 0;
  for (int i = 0; i < n; ++i) stayed += sample_excursion_tree(t, 1, g).nodes.size() == 1;
  double expect = 1.0 - std::exp(-a) / t.hx(1);
  double se = std::sqrt(expect * (1 - expect) / n);
  EXPECT_NEAR(static_cast<double>(stayed) / n, expect, 4 * se);
}

TEST(Excursion, MeanEdgeCountIsWeight) {
  MarkLaw law = two_point_law(0.05);
  MarkedTree t(law, 17);
  t.additive_martingale(3);
  SplitMix64 g(4);
  ExcursionOptions opt;
  opt.max_depth = 3;
  const int n = 200000;
  std::map<NodeId, std::vector<double>> counts;
  for (NodeId x = 1; x < t.size(); ++x)
    if (t.depth(x) <= 3) counts[x].assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    auto ex = sample_excursion_tree(t, 1, g, opt);
    for (std::size_t j = 1; j < ex.nodes.size(); ++j) counts[ex.nodes[j].env][i] = static_cast<double>(ex.nodes[j].count);
  }
  for (auto& [x, v] : counts) {
    MeanSe m = mean_se(v);
    EXPECT_NEAR(m.mean, std::exp(-t.potential(x)), 4 * m.se) << "node " << x;
  }
}

// Direct sampler and walk-derived excursion trees agree in law on a frozen environment.
TEST(Excursion, DirectSamplerMatchesWalk) {
  MarkLaw law = two_point_law(0.05);
  MarkedTree lazy(law, 23);
  MarkedTree t = lazy.truncated(4);
  SplitMix64 g(5), gw(6);
  const int n = 100000;
  const std::size_t bins = 6;
  std::map<NodeId, std::vector<double>> direct, walked;
  for (NodeId x = 1; x < t.size(); ++x)
    if (t.depth(x) <= 2) {
      direct[x].assign(bins, 0.0);
      walked[x].assign(bins, 0.0);
    }
  auto tally = [&](std::map<NodeId, std::vector<double>>& h, const ExcursionTree& ex) {
    std::map<NodeId, std::uint64_t> c;
    for (const auto& node : ex.nodes) c[node.env] = node.count;
    for (auto& [x, v] : h) v[std::min<std::uint64_t>(c.count(x) ? c[x] : 0, bins - 1)] += 1;
  };
  for (int i = 0; i < n; ++i) tally(direct, sample_excursion_tree(t, 1, g));
  for (int i = 0; i < n; ++i) {
    WalkRecord r;
    run_until_tau(t, r, 1, gw);
    tally(walked, excursion_from_walk(t, r));
  }
  for (auto& [x, v] : direct) {
    auto chi = chi_square_two_sample(v, walked[x]);
    EXPECT_GT(chi.p_value, 1e-3) << "node " << x;
  }
}

TEST(Excursion, WalkTreeCountsSatisfyTauIdentity) {
  MarkLaw law = two_point_law(0.05);
  for (std::uint64_t s = 0; s < 100; ++s) {
    MarkedTree t(law, s);
    WalkRecord r;
    SplitMix64 g(s + 1);
    run_until_tau(t, r, 3, g, 100'000'000);
    auto ex = excursion_from_walk(t, r);
    EXPECT_EQ(ex.tau(), r.time);
    EXPECT_EQ(ex.nodes.size(), r.range);
  }
}

TEST(Regen, AllOnesBelowRoot) {
  // Root with three children; excursion visits two of them once each and
  // one grandchild once.
  MarkedTree t = MarkedTree::from_children({{0.0, 0.0, 0.0}, {0.0}});
  ExcursionTree ex;
  ex.p = 1;
  ex.nodes = {{0, 1, UINT32_MAX, 1, 2, 0, true},
              {1, 1, 0, 3, 1, 1, true},
              {3, 1, 0, 0, 0, 1, true},
              {4, 1, 1, 0, 0, 2, true}};
  auto b = extract_regen(ex, 0);
  std::sort(b.members.begin(), b.members.end());
  EXPECT_EQ(b.members, (std::vector<NodeId>{1, 3}));
  EXPECT_TRUE(is_antichain(ex, b));
  EXPECT_EQ(to_newick(ex, t), "((x4[N=1,V=0])x1[N=1,V=0],x3[N=1,V=0])x0[N=1,V=0];");
}

TEST(Regen, MatchesNaiveFilterAndIsAntichain) {
  MarkLaw law = two_point_law(0.05);
  SplitMix64 g(8);
  for (std::uint64_t s = 0; s < 100; ++s) {
    MarkedTree t(law, 100 + s);
    auto ex = sample_excursion_tree(t, 1 + s % 7, g);
    for (std::uint32_t level : {0u, 1u, 3u}) {
      auto b = extract_regen(ex, level);
      auto naive = naive_regen_filter(ex, level);
      auto fast = b.indices;
      std::sort(fast.begin(), fast.end());
      EXPECT_EQ(fast, naive);
      EXPECT_TRUE(is_antichain(ex, b));
    }
  }
}

TEST(Regen, TruncatedExplorationGivesSameSet) {
  MarkLaw law = two_point_law(0.05);
  for (std::uint64_t s = 0; s < 200; ++s) {
    MarkedTree t(law, 300 + s);
    SplitMix64 g1(s), g2(s), g3(s);
    ExcursionOptions opt;
    opt.truncate_below = 2;
    auto full = sample_excursion_tree(t, 4, g1);
    auto cut = sample_excursion_tree(t, 4, g2, opt);
    EXPECT_LE(cut.nodes.size(), full.nodes.size());
    auto bf = extract_regen(full, 2).members, bc = extract_regen(cut, 2).members;
    std::sort(bf.begin(), bf.end());
    std::sort(bc.begin(), bc.end());
    EXPECT_EQ(bf, bc);
    auto summary = sample_excursion_summary(t, 4, g3);
    EXPECT_EQ(summary.tau(), full.tau());
    EXPECT_EQ(summary.visited, full.nodes.size());
  }
}

// E[B^m_0] = m for the excursion started from type m.
TEST(Regen, MeanCardinalIsType) {
  MarkLaw law = two_point_law(0.02);
  ExcursionOptions opt;
  opt.truncate_below = 0;
  for (std::uint64_t m : {1ULL, 5ULL}) {
    const int n = 20000;
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) {
      MarkedTree t(law, substream_seed(1, "regen-mean", i, StreamRole::Environment));
      SplitMix64 g(substream_seed(1, "regen-mean", i, StreamRole::Walk));
      b[i] = static_cast<double>(extract_regen(sample_excursion_tree(t, m, g, opt), 0).size());
    }
    MeanSe ms = mean_se(b);
    EXPECT_NEAR(ms.mean, static_cast<double>(m), 4 * ms.se);
  }
}

TEST(Regen, MonotonicityDiagnosticIsAFraction) {
  MarkLaw law = two_point_law(0.05);
  MarkedTree t = MarkedTree(law, 5).truncated(5);
  SplitMix64 g(9);
  double f = regen_monotonicity_diag(t, 5, 1, 50, g);
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
}

TEST(Regen, DensityDiagnosticRows) {
  auto rows = regen_density_diag(two_point_law(0.02), 0.5, {0.5, 1.0}, {20, 50}, 5, 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].level, static_cast<std::uint32_t>(std::ceil(std::pow(std::log(20.0), 2))));
  for (const auto& r : rows) EXPECT_GE(r.mean_sup_deviation, 0.0);
}
