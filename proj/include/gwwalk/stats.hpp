#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "gwwalk/error.hpp"
#include "gwwalk/rng.hpp"

namespace gwwalk {

inline constexpr std::size_t kBootstrapResamples = 400;

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> x) {
  MeanSe out;
  out.n = x.size();
  if (x.empty()) return out;
  // Two passes for accuracy on heavy-tailed data.
  double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  out.mean = m;
  out.sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
  out.se = out.sd / std::sqrt(static_cast<double>(x.size()));
  return out;
}

struct LaplaceRow {
  double lambda = 0.0;
  double value = 0.0;
  double se = 0.0;
};

/// Mean of e^{-lambda X} per lambda with its standard error.
inline std::vector<LaplaceRow> empirical_laplace(std::span<const double> samples, std::span<const double> lambdas) {
  std::vector<LaplaceRow> rows;
  std::vector<double> t(samples.size());
  for (double l : lambdas) {
    for (std::size_t i = 0; i < samples.size(); ++i) t[i] = l == 0.0 ? 1.0 : std::exp(-l * samples[i]);
    MeanSe m = mean_se(t);
    rows.push_back({l, m.mean, m.se});
  }
  return rows;
}

/// sup_x |F_n(x) - F(x)|.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

struct TailIndex {
  double alpha = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t k = 0;
  double threshold = 0.0;
};

/// Hill estimator from the k largest order statistics, with the asymptotic
/// normal 95% interval alpha (1 +- 1.96 / sqrt(k)).
inline TailIndex hill_tail_index(std::vector<double> samples, std::size_t k) {
  if (k < 2 || k >= samples.size()) throw Error(ErrorCode::InvalidArgument, "Hill needs 2 <= k < n");
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end(),
                   std::greater<>());
  const double xk = samples[k];
  if (!(xk > 0.0)) throw Error(ErrorCode::InvalidArgument, "Hill threshold must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(samples[i] / xk);
  TailIndex out;
  out.k = k;
  out.threshold = xk;
  out.alpha = static_cast<double>(k) / s;
  const double half = 1.96 / std::sqrt(static_cast<double>(k));
  out.ci_lo = out.alpha * (1.0 - half);
  out.ci_hi = out.alpha * (1.0 + half);
  return out;
}

struct Slope {
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Weighted least-squares fit of log y on log x.
inline Slope loglog_slope(std::span<const double> x, std::span<const double> y,
                          std::span<const double> weights = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!weights.empty() && weights.size() != n))
    throw Error(ErrorCode::InvalidArgument, "loglog_slope needs matching arrays of length >= 2");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * std::log(x[i]);
    sy += w * std::log(y[i]);
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    double dx = std::log(x[i]) - mx;
    sxx += w * dx * dx;
    sxy += w * dx * (std::log(y[i]) - my);
  }
  Slope out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double w = weights.empty() ? 1.0 : weights[i];
      double r = std::log(y[i]) - out.intercept - out.slope * std::log(x[i]);
      rss += w * r * r;
    }
    out.se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  out.ci_lo = out.slope - 1.96 * out.se;
  out.ci_hi = out.slope + 1.96 * out.se;
  return out;
}

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
};

/// Percentile bootstrap of an arbitrary statistic.
inline BootstrapCi bootstrap(std::span<const double> x, const std::function<double(std::span<const double>)>& stat,
                             std::uint64_t seed, std::size_t resamples = kBootstrapResamples) {
  SplitMix64 g(seed);
  std::vector<double> buf(x.size()), reps;
  reps.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& v : buf) v = x[static_cast<std::size_t>(uniform01(g) * static_cast<double>(x.size()))];
    reps.push_back(stat(buf));
  }
  std::sort(reps.begin(), reps.end());
  BootstrapCi out;
  out.lo = reps[static_cast<std::size_t>(0.025 * (resamples - 1))];
  out.hi = reps[static_cast<std::size_t>(0.975 * (resamples - 1))];
  out.se = mean_se(reps).sd;
  return out;
}

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

inline double chi_square_sf(double stat, std::size_t dof) {
  if (dof == 0) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * stat);
}

/// Goodness of fit of counts to cell probabilities; cells with expected count
/// below min_expected are pooled (in order) with their neighbours.
inline ChiSquare chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                                double min_expected = 5.0) {
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  std::vector<double> cell_o(observed.begin(), observed.end()), cell_e;
  for (double p : probs) cell_e.push_back(p * n);
  // Probability outside the listed cells becomes one extra (empty) cell.
  const double tail = std::max(0.0, 1.0 - std::accumulate(probs.begin(), probs.end(), 0.0));
  cell_o.push_back(0.0);
  cell_e.push_back(tail * n);
  std::vector<double> o, e;
  double co = 0, ce = 0;
  for (std::size_t i = 0; i < cell_o.size(); ++i) {
    co += cell_o[i];
    ce += cell_e[i];
    if (ce >= min_expected) {
      o.push_back(co);
      e.push_back(ce);
      co = ce = 0;
    }
  }
  if (!e.empty()) {
    o.back() += co;
    e.back() += ce;
  }
  ChiSquare out;
  for (std::size_t i = 0; i < o.size(); ++i) out.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  out.dof = o.size() > 1 ? o.size() - 1 : 0;
  out.p_value = chi_square_sf(out.statistic, out.dof);
  return out;
}

/// Two-sample homogeneity test on binned counts.
inline ChiSquare chi_square_two_sample(std::span<const double> a, std::span<const double> b,
                                       double min_expected = 5.0) {
  const double na = std::accumulate(a.begin(), a.end(), 0.0), nb = std::accumulate(b.begin(), b.end(), 0.0);
  std::vector<double> pa, pb;
  double ca = 0, cb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
    double tot = ca + cb;
    if (std::min(tot * na, tot * nb) / (na + nb) >= min_expected) {
      pa.push_back(ca);
      pb.push_back(cb);
      ca = cb = 0;
    }
  }
  if (!pa.empty()) {
    pa.back() += ca;
    pb.back() += cb;
  }
  ChiSquare out;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    double tot = pa[i] + pb[i];
    double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
    out.statistic += (pa[i] - ea) * (pa[i] - ea) / ea + (pb[i] - eb) * (pb[i] - eb) / eb;
  }
  out.dof = pa.size() > 1 ? pa.size() - 1 : 0;
  out.p_value = chi_square_sf(out.statistic, out.dof);
  return out;
}

/// One auditable acceptance row.
struct Verdict {
  std::string experiment;
  std::string statistic;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::size_t n_samples = 0;
  std::vector<double> ses;
  std::string note;
};

inline nlohmann::json to_json(const Verdict& v) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json ses = nlohmann::json::array();
  for (double s : v.ses) ses.push_back(num(s));
  nlohmann::json j{{"experiment", v.experiment},
                   {"statistic", v.statistic},
                   {"value", num(v.value)},
                   {"ci", {num(v.ci_lo), num(v.ci_hi)}},
                   {"threshold", num(v.threshold)},
                   {"pass", v.pass},
                   {"n_samples", v.n_samples},
                   {"ses", ses}};
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

inline void write_verdicts(const std::string& path, const std::vector<Verdict>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : rows) arr.push_back(to_json(v));
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << arr.dump(2) << '\n';
}

}  // namespace gwwalk
