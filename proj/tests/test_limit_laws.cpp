#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "gwwalk/limit_laws.hpp"

using namespace gwwalk;

namespace {

// E[e^{-lambda |N|}] for standard normal N.
double abs_normal_laplace(double lambda) {
  return std::exp(0.5 * lambda * lambda) * std::erfc(lambda / std::numbers::sqrt2);
}

// Mittag-Leffler function E_a(-x), 0 < a < 1, through its integral
// representation as a completely monotone function.
double ml_integral(double a, double x) {
  boost::math::quadrature::exp_sinh<double> q;
  const double s = std::sin(a * std::numbers::pi), c = std::cos(a * std::numbers::pi);
  const double y = std::pow(x, 1.0 / a);
  auto f = [&](double r) {
    double ra = std::pow(r, a);
    return std::exp(-r * y) * std::pow(r, a - 1.0) * s / (ra * ra + 2.0 * ra * c + 1.0);
  };
  return q.integrate(f) / std::numbers::pi;
}

}  // namespace

TEST(MlLaplace, ZeroIsOne) {
  for (double g : {1.1, 1.5, 2.0}) EXPECT_EQ(ml_laplace(g, 0.0), 1.0);
}

TEST(MlLaplace, GaussianClosedForm) {
  EXPECT_NEAR(ml_laplace(2.0, 1.0), 2.0 * std::exp(0.5) * 0.5 * std::erfc(1.0 / std::numbers::sqrt2), 1e-12);
  for (double l = 0.0; l <= 5.0; l += 0.125) EXPECT_NEAR(ml_laplace(2.0, l), abs_normal_laplace(l), 1e-8) << l;
}

TEST(MlLaplace, MatchesIntegralRepresentation) {
  for (double g : {1.2, 1.5, 1.8})
    for (double l : {0.3, 1.0, 2.5, 6.0}) EXPECT_NEAR(ml_laplace(g, l), ml_integral(1.0 / g, l), 1e-10) << g << ' ' << l;
}

TEST(MlLaplace, LargeLambdaStaysAccurate) {
  // Terms reach e^{30^1.9} in magnitude before cancelling.
  EXPECT_NEAR(ml_laplace(1.9, 30.0), ml_integral(1.0 / 1.9, 30.0), 1e-10);
  EXPECT_NEAR(ml_laplace(2.0, 30.0), abs_normal_laplace(30.0), 1e-10);
}

TEST(MlLaplace, CompletelyMonotoneOnGrid) {
  for (double g : {1.1, 1.3, 1.5, 1.7, 1.9, 2.0}) {
    double prev = 1.0;
    for (double l = 0.25; l <= 20.0; l += 0.25) {
      double v = ml_laplace(g, l);
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_LT(v, prev) << g << ' ' << l;
      prev = v;
    }
  }
}

TEST(MlLaplace, Errors) {
  try {
    ml_laplace(1.5, 30.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Range);
  }
  EXPECT_THROW(ml_laplace(1.0, 1.0), Error);
  EXPECT_THROW(ml_laplace(2.1, 1.0), Error);
  EXPECT_THROW(ml_laplace(1.5, -1.0), Error);
}

TEST(HitLaplace, Examples) {
  EXPECT_EQ(hit_laplace(1.5, 0.0, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(hit_laplace(2.0, 1.0, 1.0), std::exp(-std::numbers::sqrt2));
}

TEST(HitLaplace, ScalingIdentity) {
  SplitMix64 g(7);
  for (int i = 0; i < 1000; ++i) {
    double gamma = i % 5 == 0 ? 2.0 : 1.0 + uniform_open0(g);
    if (gamma >= 2.0) gamma = 2.0;
    double a = 3.0 * uniform01(g), c = 0.1 + 3.0 * uniform01(g), l = 5.0 * uniform01(g);
    double lhs = hit_laplace(gamma, c * a, l), rhs = hit_laplace(gamma, a, std::pow(c, gamma) * l);
    EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, lhs));
  }
}

TEST(StableSampler, TransformCheck) {
  SplitMix64 g(11);
  const double gamma = 1.5;
  const std::size_t n = 1'000'000;
  for (double l : {0.1, 0.5}) {
    double s = 0.0;
    SplitMix64 h(g());
    for (std::size_t i = 0; i < n; ++i) s += std::exp(l * sample_stable_unit(gamma, h));
    double target = std::exp(std::pow(l, gamma));
    EXPECT_LT(std::abs(s / n - target) / target, 0.02) << l;
  }
}

TEST(StableSampler, IncrementTransformWithinThreeSe) {
  SplitMix64 g(12);
  const double gamma = 1.6, dt = 0.01, scale = std::pow(dt, 1.0 / gamma);
  const std::size_t n = 400'000;
  for (double l : {0.5, 1.0}) {
    std::vector<double> v(n);
    for (auto& x : v) x = std::exp(l * scale * sample_stable_unit(gamma, g));
    MeanSe m = mean_se(v);
    // Delta method on log.
    double est = std::log(m.mean) / dt, se = m.se / m.mean / dt;
    EXPECT_LT(std::abs(est - std::pow(l, gamma)), 3.0 * se + 1e-12) << l;
  }
}

TEST(StableSampler, SupNearZeroForSmallTime) {
  SplitMix64 g(13);
  std::vector<double> s(100'000);
  for (auto& x : s) x = sample_stable_path_functional(1.5, 1e-4, PathFunctional::Sup, 16, g);
  std::nth_element(s.begin(), s.begin() + 50'000, s.end());
  EXPECT_LT(s[50'000], 0.05);
}

TEST(StableSampler, SupMatchesSeries) {
  // Grid sups underestimate by O(dt^{1/gamma}); extrapolate from the grids
  // dt and 2 dt of the same path.
  SplitMix64 g(14);
  const double gamma = 1.5;
  const std::size_t paths = 20'000, steps = 2048;
  const double r = std::pow(2.0, 1.0 / gamma);
  const std::vector<double> lambdas{0.5, 1.0, 2.0};
  std::vector<std::vector<double>> ex(lambdas.size(), std::vector<double>(paths));
  for (std::size_t p = 0; p < paths; ++p) {
    auto y = sample_stable_path(gamma, 1.0, steps, g);
    double fine = 0.0, coarse = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      fine = std::max(fine, y[k]);
      if (k % 2 == 0) coarse = std::max(coarse, y[k]);
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      ex[i][p] = (r * std::exp(-lambdas[i] * fine) - std::exp(-lambdas[i] * coarse)) / (r - 1.0);
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    MeanSe m = mean_se(ex[i]);
    EXPECT_LT(std::abs(m.mean - ml_laplace(gamma, lambdas[i])), 3.0 * m.se) << lambdas[i];
  }
}

TEST(StableSampler, HitMatchesLaplace) {
  SplitMix64 g(15);
  const double gamma = 1.5;
  const std::size_t paths = 20'000;
  std::vector<double> v(paths);
  for (auto& x : v) {
    double t = sample_stable_path_functional(gamma, 50.0, PathFunctional::Hit, 20'000, g, 0.5);
    x = std::exp(-t);
  }
  MeanSe m = mean_se(v);
  // Grid hitting times are late by a bias of order dt; allow 0.01 on top of MC error.
  EXPECT_LT(std::abs(m.mean - hit_laplace(gamma, 0.5, 1.0)), 3.0 * m.se + 0.01);
  EXPECT_THROW(sample_stable_path_functional(2.0, 1.0, PathFunctional::Sup, 10, g), Error);
}

TEST(DiscountedMoments, DeterministicWalk) {
  auto est = estimate_discounted_moments(constant_bias_law(2.0), 1000, 1e-14, 1);
  EXPECT_NEAR(est.c_inf.value, 0.25, 1e-12);
  EXPECT_NEAR(est.c_inf_bold.value, 0.5, 1e-12);
  EXPECT_NEAR(est.c_inf.ci_lo, 0.25, 1e-12);
  EXPECT_NEAR(est.c_inf.ci_hi, 0.25, 1e-12);
}

TEST(DiscountedMoments, JensenAndHorizonStability) {
  for (double p : {0.02, 0.05, 0.07}) {
    auto law = two_point_law(p);
    auto a = estimate_discounted_moments(law, 100'000, 1e-12, 2);
    EXPECT_GT(a.c_inf.value, 0.0);
    EXPECT_GT(a.c_inf_bold.value, 0.0);
    EXPECT_GE(a.c_inf.ci_hi, a.c_inf_bold.ci_lo * a.c_inf_bold.ci_lo);
    // Same draws, looser truncation: the sums move by at most ~eps.
    auto b = estimate_discounted_moments(law, 100'000, 2e-12, 2);
    EXPECT_LT(std::abs(a.c_inf.value - b.c_inf.value), a.c_inf.se);
    EXPECT_LT(std::abs(a.c_inf_bold.value - b.c_inf_bold.value), a.c_inf_bold.se);
  }
}

TEST(DiscountedMoments, RejectsNonPositiveDrift) {
  EXPECT_THROW(estimate_discounted_moments(constant_bias_law(0.5), 10, 1e-12, 1), Error);
}

TEST(TailConstant, ParetoPlateau) {
  // P(X > m) = m^{-1.5} for m >= 1: c = 1 on the whole grid.
  SplitMix64 g(21);
  std::vector<double> x(50'000);
  for (auto& v : x) v = std::pow(uniform_open0(g), -1.0 / 1.5);
  auto est = estimate_c_kappa(x, 1.5, geometric_grid(2.0, 100.0, 12), 3, 1000);
  EXPECT_NEAR(est.c_kappa, 1.0, 0.1);
  EXPECT_LE(est.ci_lo, 1.0);
  EXPECT_GE(est.ci_hi, 1.0);
  EXPECT_TRUE(est.plateau);
  EXPECT_NEAR(est.hill.alpha, 1.5, 0.15);
}

TEST(TailConstant, WarnsWithoutPlateau) {
  SplitMix64 g(22);
  std::vector<double> x(50'000);
  for (auto& v : x) v = exponential1(g);
  auto est = estimate_c_kappa(x, 1.5, geometric_grid(0.5, 8.0, 10), 3, 500);
  EXPECT_FALSE(est.plateau);
  ASSERT_FALSE(est.warnings.empty());
  EXPECT_EQ(est.warnings[0].rfind("NO_PLATEAU", 0), 0u);
}

TEST(TailConstant, B10HasUnitMeanAndKappaTail) {
  // E[B^1_0] = 1 for the calibrated law. At this sample size the Hill
  // estimate still sits below kappa (slow approach to the power tail), so only
  // the heavy-tail bracket 1 < alpha < kappa + 0.3 is asserted.
  auto law = two_point_law(0.05);
  auto b = sample_b10_batch(law, 200'000, 5);
  MeanSe m = mean_se(b);
  EXPECT_LT(std::abs(m.mean - 1.0), 4.0 * m.se + 0.01);
  auto h = hill_tail_index(b, 2000);
  EXPECT_GT(h.alpha, 1.0);
  EXPECT_LT(h.alpha, solve_kappa(law) + 0.3);
}

TEST(ReferenceCsv, Format) {
  std::ostringstream os;
  write_reference_csv(os, {0.0, 1.0}, [](double l) { return ml_laplace(2.0, l); });
  EXPECT_EQ(os.str().substr(0, 15), "lambda,value\n0,");
}

TEST(TailConstant, WindowGridFollowsExceedanceCounts) {
  std::vector<double> x;
  for (int i = 1; i <= 10'000; ++i) x.push_back(i);
  auto g = tail_window_grid(x, 1000, 10, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 9000.0);
  EXPECT_EQ(g.back(), 9990.0);
  EXPECT_THROW(tail_window_grid(x, 10, 1000, 5), Error);
}
