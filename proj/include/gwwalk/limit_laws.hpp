#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <mpfr.h>

#include "gwwalk/error.hpp"
#include "gwwalk/excursion.hpp"
#include "gwwalk/mark_law.hpp"
#include "gwwalk/rng.hpp"
#include "gwwalk/s_walk.hpp"
#include "gwwalk/stats.hpp"

namespace gwwalk {

inline constexpr double kMlLambdaMax = 30.0;

namespace detail {

class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }

 private:
  mpfr_t v_;
};

// sum_k (-x)^k / Gamma(1 + k/gamma). The terms peak near e^{x^gamma}, so the
// working precision grows with x^gamma to absorb the cancellation.
inline double ml_series(double gamma, double x) {
  if (x == 0.0) return 1.0;
  const double peak_log = std::pow(x, gamma);
  const auto prec = static_cast<mpfr_prec_t>(peak_log / std::numbers::ln2 + 128);
  Mpfr sum(prec), term(prec), xk(prec), arg(prec), g(prec), mx(prec);
  mpfr_set_d(mx.get(), -x, MPFR_RNDN);
  mpfr_set_ui(sum.get(), 0, MPFR_RNDN);
  mpfr_set_ui(xk.get(), 1, MPFR_RNDN);
  const double log_x = std::log(x);
  const double k_peak = gamma * peak_log;
  for (std::uint64_t k = 0;; ++k) {
    mpfr_set_ui(arg.get(), k, MPFR_RNDN);
    mpfr_div_d(arg.get(), arg.get(), gamma, MPFR_RNDN);
    mpfr_add_ui(arg.get(), arg.get(), 1, MPFR_RNDN);
    mpfr_gamma(g.get(), arg.get(), MPFR_RNDN);
    mpfr_div(term.get(), xk.get(), g.get(), MPFR_RNDN);
    mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
    mpfr_mul(xk.get(), xk.get(), mx.get(), MPFR_RNDN);
    // Past the peak the series alternates with decreasing terms: stop once
    // the next term is negligible.
    const double kk = static_cast<double>(k + 1);
    if (kk > k_peak + 2 && kk * log_x - std::lgamma(1.0 + kk / gamma) < -60.0) break;
  }
  return mpfr_get_d(sum.get(), MPFR_RNDN);
}

}  // namespace detail

/// E[exp(-lambda S(1, Y))] for the running supremum at time 1 of the
/// spectrally negative process used in the limit theorems: the stable process
/// with E[e^{lambda Y_t}] = e^{t lambda^gamma} for gamma in (1,2), and standard
/// Brownian motion for gamma = 2 (then S(1,B) ~ |N|).
inline double ml_laplace(double gamma, double lambda) {
  if (!(gamma > 1.0 && gamma <= 2.0)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (1,2]");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
  if (lambda > kMlLambdaMax) throw Error(ErrorCode::Range, "ml_laplace is only certified for lambda <= 30");
  // Brownian normalization: B = Y^(2) / sqrt(2).
  const double x = gamma == 2.0 ? lambda / std::numbers::sqrt2 : lambda;
  return detail::ml_series(gamma, x);
}

/// E[exp(-lambda tau_alpha)] for the first passage above alpha, with the same
/// process convention as ml_laplace.
inline double hit_laplace(double gamma, double alpha, double lambda) {
  if (!(gamma > 1.0 && gamma <= 2.0)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (1,2]");
  if (gamma == 2.0) return std::exp(-alpha * std::sqrt(2.0 * lambda));
  return std::exp(-alpha * std::pow(lambda, 1.0 / gamma));
}

/// One draw of Y_1 with E[e^{lambda Y_1}] = e^{lambda^gamma}: minus a totally
/// right-skewed stable variable S_gamma(sigma, 1, 0) (Chambers-Mallows-Stuck),
/// sigma = |cos(pi gamma / 2)|^{1/gamma}.
template <class Gen>
double sample_stable_unit(double gamma, Gen& g) {
  const double a = gamma;
  const double t = std::tan(std::numbers::pi * a / 2.0);
  const double b = std::atan(t) / a;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
  const double v = std::numbers::pi * (uniform01(g) - 0.5);
  const double w = exponential1(g);
  const double x = s * std::sin(a * (v + b)) / std::pow(std::cos(v), 1.0 / a) *
                   std::pow(std::cos(v - a * (v + b)) / w, (1.0 - a) / a);
  const double sigma = std::pow(std::abs(std::cos(std::numbers::pi * a / 2.0)), 1.0 / a);
  return -sigma * x;
}

/// Y on the grid k t / n, k = 0..n.
template <class Gen>
std::vector<double> sample_stable_path(double gamma, double t, std::size_t n, Gen& g) {
  std::vector<double> y(n + 1, 0.0);
  const double scale = std::pow(t / static_cast<double>(n), 1.0 / gamma);
  for (std::size_t k = 1; k <= n; ++k) y[k] = y[k - 1] + scale * sample_stable_unit(gamma, g);
  return y;
}

enum class PathFunctional { Sup, Hit };

/// Discretized sup_{s<=t} Y_s (Sup) or first grid time with Y > alpha (Hit;
/// +infinity when the level is not reached by t). Both carry a grid bias of
/// order (t/n)^{1/gamma}.
template <class Gen>
double sample_stable_path_functional(double gamma, double t, PathFunctional f, std::size_t n, Gen& g,
                                     double alpha = 1.0) {
  if (!(gamma > 1.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidArgument, "stable sampler needs gamma in (1,2)");
  const double dt = t / static_cast<double>(n);
  const double scale = std::pow(dt, 1.0 / gamma);
  double y = 0.0, sup = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    y += scale * sample_stable_unit(gamma, g);
    sup = std::max(sup, y);
    if (f == PathFunctional::Hit && y > alpha) return dt * static_cast<double>(k);
  }
  return f == PathFunctional::Sup ? sup : kInf;
}

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n = 0;
};

struct DiscountedMoments {
  Estimate c_inf;       // E[(sum e^{-S_j})^{-2}]
  Estimate c_inf_bold;  // E[(sum e^{-S_j})^{-1}]
  double drift = 0.0;
};

/// Monte Carlo estimates of the discounted-sum moments with bootstrap CIs.
inline DiscountedMoments estimate_discounted_moments(const MarkLaw& law, std::size_t n_samples, double eps,
                                                     std::uint64_t seed) {
  SWalkIncrements inc(law);
  if (!(inc.drift() > 0.0)) throw Error(ErrorCode::AssumptionViolation, "S-walk needs positive drift");
  std::vector<double> inv(n_samples), inv2(n_samples);
  SplitMix64 g(substream_seed(seed, "discounted-moments", 0, StreamRole::Auxiliary));
  for (std::size_t i = 0; i < n_samples; ++i) {
    double d = discounted_sum(inc, g, eps);
    inv[i] = 1.0 / d;
    inv2[i] = inv[i] * inv[i];
  }
  auto mean = [](std::span<const double> x) { return mean_se(x).mean; };
  auto fill = [&](const std::vector<double>& x, std::uint64_t role) {
    Estimate e;
    MeanSe m = mean_se(x);
    e.value = m.mean;
    e.se = m.se;
    e.n = m.n;
    BootstrapCi b = bootstrap(x, mean, substream_seed(seed, "discounted-moments", role, StreamRole::Bootstrap));
    e.ci_lo = b.lo;
    e.ci_hi = b.hi;
    return e;
  };
  DiscountedMoments out;
  out.c_inf = fill(inv2, 1);
  out.c_inf_bold = fill(inv, 2);
  out.drift = inc.drift();
  return out;
}

/// B^1_0 under the annealed law: a fresh environment per draw, excursion tree
/// explored only down to the first vertex of count 1 on each line.
template <class Gen>
std::uint64_t sample_b10(MarkedTree& env, Gen& g) {
  ExcursionOptions opt;
  opt.truncate_below = 0;
  return extract_regen(sample_excursion_tree(env, 1, g, opt), 0).size();
}

inline std::vector<double> sample_b10_batch(const MarkLaw& law, std::size_t n, std::uint64_t seed,
                                            std::string_view label = "b10") {
  std::vector<double> out(n);
  MarkedTree env;
  env.reset(law, 0);
  for (std::size_t i = 0; i < n; ++i) {
    env.reset(substream_seed(seed, label, i, StreamRole::Environment));
    SplitMix64 g(substream_seed(seed, label, i, StreamRole::Walk));
    out[i] = static_cast<double>(sample_b10(env, g));
  }
  return out;
}

struct TailConstant {
  double c_kappa = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<std::pair<double, double>> grid;  // (m, m^kappa P(B > m))
  TailIndex hill;
  bool plateau = true;
  std::vector<std::string> warnings;
};

namespace detail {
// Median of m^kappa P(B > m) over the upper half of the grid, from the
// exceedance counts above each grid point.
inline double tail_plateau(const std::vector<double>& above, double n, double kappa, const std::vector<double>& m_grid,
                           std::vector<std::pair<double, double>>* grid_out) {
  std::vector<double> top;
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    double v = std::pow(m_grid[i], kappa) * above[i] / n;
    if (grid_out) grid_out->emplace_back(m_grid[i], v);
    if (i >= m_grid.size() / 2) top.push_back(v);
  }
  std::sort(top.begin(), top.end());
  return top[top.size() / 2];
}
}  // namespace detail

/// Plateau estimate of c_kappa = lim m^kappa P(B^1_0 > m) from samples: the
/// median of m^kappa P(B > m) over the upper half of an increasing m-grid,
/// with a bootstrap CI and a Hill cross-check (k = hill_k order statistics).
/// The statistic only sees the counts between grid points, so bootstrap
/// resamples draw those counts from the multinomial law directly.
inline TailConstant estimate_c_kappa(const std::vector<double>& samples, double kappa,
                                     const std::vector<double>& m_grid, std::uint64_t seed, std::size_t hill_k) {
  if (m_grid.size() < 2 || !std::is_sorted(m_grid.begin(), m_grid.end()))
    throw Error(ErrorCode::InvalidArgument, "m-grid needs at least two increasing points");
  TailConstant out;
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> above;
  for (double m : m_grid)
    above.push_back(static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), m)));
  out.c_kappa = detail::tail_plateau(above, n, kappa, m_grid, &out.grid);
  std::vector<double> top;
  for (std::size_t i = out.grid.size() / 2; i < out.grid.size(); ++i) top.push_back(out.grid[i].second);
  auto [lo, hi] = std::minmax_element(top.begin(), top.end());
  if (*lo <= 0.0 || *hi / *lo > 1.5) {
    out.plateau = false;
    out.warnings.emplace_back("NO_PLATEAU: upper-grid values vary by more than 50%");
  }
  // Cells: (m_i, m_{i+1}] and (m_last, inf); everything below m_0 is one cell.
  std::vector<double> cell(m_grid.size());
  for (std::size_t i = 0; i < m_grid.size(); ++i) cell[i] = above[i] - (i + 1 < m_grid.size() ? above[i + 1] : 0.0);
  SplitMix64 g(substream_seed(seed, "c-kappa", 0, StreamRole::Bootstrap));
  std::vector<double> reps;
  std::vector<double> boot(m_grid.size());
  for (std::size_t b = 0; b < kBootstrapResamples; ++b) {
    double left = n, mass = n;
    for (std::size_t i = 0; i < cell.size(); ++i) {
      double k = 0.0;
      if (left > 0 && cell[i] > 0) {
        std::binomial_distribution<std::uint64_t> d(static_cast<std::uint64_t>(left), std::min(1.0, cell[i] / mass));
        k = static_cast<double>(d(g));
      }
      boot[i] = k;
      left -= k;
      mass -= cell[i];
    }
    for (std::size_t i = cell.size() - 1; i-- > 0;) boot[i] += boot[i + 1];
    reps.push_back(detail::tail_plateau(boot, n, kappa, m_grid, nullptr));
  }
  std::sort(reps.begin(), reps.end());
  out.ci_lo = reps[static_cast<std::size_t>(0.025 * (kBootstrapResamples - 1))];
  out.ci_hi = reps[static_cast<std::size_t>(0.975 * (kBootstrapResamples - 1))];
  out.hill = hill_tail_index(samples, std::min(hill_k, samples.size() - 1));
  return out;
}

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g;
  for (std::size_t i = 0; i < points; ++i)
    g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1)));
  return g;
}

/// Plateau window: geometric grid from the sample point with `hi_count`
/// exceedances to the one with `lo_count` exceedances.
inline std::vector<double> tail_window_grid(std::vector<double> samples, double hi_count, double lo_count,
                                            std::size_t points) {
  if (!(hi_count > lo_count && lo_count >= 1.0) || hi_count >= static_cast<double>(samples.size()))
    throw Error(ErrorCode::InvalidArgument, "tail window needs n > hi_count > lo_count >= 1");
  std::sort(samples.begin(), samples.end(), std::greater<>());
  const double hi = samples[static_cast<std::size_t>(lo_count)];
  const double lo = std::max(1.0, samples[static_cast<std::size_t>(hi_count)]);
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "tail window is empty");
  return geometric_grid(lo, hi, points);
}

/// Reference-law table as CSV (lambda, value).
inline void write_reference_csv(std::ostream& os, const std::vector<double>& lambdas,
                                const std::function<double(double)>& law) {
  os.precision(17);
  os << "lambda,value\n";
  for (double l : lambdas) os << l << ',' << law(l) << '\n';
}

}  // namespace gwwalk
