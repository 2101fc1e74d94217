#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "gwwalk/rng.hpp"
#include "gwwalk/stats.hpp"

using namespace gwwalk;

TEST(EmpiricalLaplace, ZerosAndDegenerateLambda) {
  std::vector<double> z(100, 0.0);
  for (const auto& r : empirical_laplace(z, std::vector<double>{0.0, 1.0, 5.0})) {
    EXPECT_EQ(r.value, 1.0);
    EXPECT_EQ(r.se, 0.0);
  }
  std::vector<double> x{0.5, 2.0, 7.0};
  auto rows = empirical_laplace(x, std::vector<double>{0.0});
  EXPECT_EQ(rows[0].value, 1.0);
  EXPECT_EQ(rows[0].se, 0.0);
}

TEST(EmpiricalLaplace, ExponentialClosedForm) {
  SplitMix64 g(1);
  std::vector<double> x(1'000'000);
  for (auto& v : x) v = exponential1(g);
  std::vector<double> lambdas{0.25, 0.5, 1.0, 2.0, 4.0};
  double prev = 1.0;
  for (const auto& r : empirical_laplace(x, lambdas)) {
    EXPECT_LT(std::abs(r.value - 1.0 / (1.0 + r.lambda)), 4.0 * r.se);
    EXPECT_LT(r.value, prev);
    prev = r.value;
  }
}

TEST(Hill, ParetoRecovery) {
  for (double alpha : {1.3, 1.7, 2.5}) {
    SplitMix64 g(static_cast<std::uint64_t>(alpha * 100));
    std::vector<double> x(1'000'000);
    for (auto& v : x) v = std::pow(uniform_open0(g), -1.0 / alpha);
    auto h = hill_tail_index(x, 10'000);
    EXPECT_NEAR(h.alpha, alpha, 0.05) << alpha;
    EXPECT_LT(h.ci_lo, alpha);
    EXPECT_GT(h.ci_hi, alpha);
  }
  EXPECT_THROW(hill_tail_index({1.0, 2.0}, 5), Error);
}

TEST(LogLogSlope, ExactPowerLaw) {
  std::vector<double> x, y;
  for (double n = 100; n <= 10000; n *= 1.7) {
    x.push_back(n);
    y.push_back(3.0 * std::pow(n, -0.4));
  }
  auto s = loglog_slope(x, y, std::vector<double>(x.size(), 1.0));
  EXPECT_NEAR(s.slope, -0.4, 1e-12);
  EXPECT_NEAR(std::exp(s.intercept), 3.0, 1e-10);
}

TEST(Ks, UniformSample) {
  SplitMix64 g(2);
  std::vector<double> x(100'000);
  for (auto& v : x) v = uniform01(g);
  double d = ks_distance(x, [](double u) { return std::clamp(u, 0.0, 1.0); });
  EXPECT_LT(d, 1.63 / std::sqrt(100'000.0));
}

TEST(Bootstrap, MeanCiCoversTruth) {
  SplitMix64 g(3);
  std::vector<double> x(5000);
  for (auto& v : x) v = exponential1(g);
  auto ci = bootstrap(x, [](std::span<const double> s) { return mean_se(s).mean; }, 17);
  EXPECT_LT(ci.lo, 1.0);
  EXPECT_GT(ci.hi, 1.0);
  EXPECT_NEAR(ci.se, 1.0 / std::sqrt(5000.0), 0.004);
  auto again = bootstrap(x, [](std::span<const double> s) { return mean_se(s).mean; }, 17);
  EXPECT_EQ(ci.lo, again.lo);
  EXPECT_EQ(ci.hi, again.hi);
}

TEST(ChiSquare, GoodnessOfFit) {
  SplitMix64 g(4);
  std::vector<double> counts(6, 0.0);
  for (int i = 0; i < 60'000; ++i) counts[static_cast<std::size_t>(uniform01(g) * 6)] += 1;
  auto c = chi_square_gof(counts, std::vector<double>(6, 1.0 / 6));
  EXPECT_GT(c.p_value, 1e-3);
  counts[0] += 2000;
  EXPECT_LT(chi_square_gof(counts, std::vector<double>(6, 1.0 / 6)).p_value, 1e-6);
}

TEST(Verdicts, JsonRoundTrip) {
  Verdict v;
  v.experiment = "exp";
  v.statistic = "stat";
  v.value = 0.5;
  v.ci_lo = std::nan("");
  v.ci_hi = 1.0;
  v.threshold = 0.1;
  v.pass = true;
  v.n_samples = 10;
  v.ses = {0.01};
  auto j = to_json(v);
  EXPECT_EQ(j["experiment"], "exp");
  EXPECT_TRUE(j["ci"][0].is_null());
  EXPECT_EQ(j["pass"], true);
  EXPECT_EQ(j["n_samples"], 10);
}
