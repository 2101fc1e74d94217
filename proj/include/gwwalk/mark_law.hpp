#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwwalk/error.hpp"

namespace gwwalk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One realization of the mark point process: offspring marks, with its probability.
struct Atom {
  double prob = 0.0;
  std::vector<double> marks;
};

/// Finite-support law of the mark point process. The only source of
/// randomness in an environment; immutable once validated.
class MarkLaw {
 public:
  MarkLaw() = default;

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  double mean_offspring() const noexcept { return mean_offspring_; }
  std::size_t max_offspring() const noexcept { return max_offspring_; }
  bool has_negative_mark() const noexcept { return has_negative_; }
  /// Without negative marks psi decreases forever and kappa is infinite.
  bool kappa_infinite_flag() const noexcept { return !has_negative_; }
  /// Index of the atom selected by a uniform u in [0,1).
  std::size_t pick_atom(double u) const noexcept {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return idx < atoms_.size() ? idx : atoms_.size() - 1;
  }

 private:
  friend MarkLaw make_mark_law(std::vector<Atom> atoms);

  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  double mean_offspring_ = 0.0;
  std::size_t max_offspring_ = 0;
  bool has_negative_ = false;
};

inline MarkLaw make_mark_law(std::vector<Atom> atoms) {
  if (atoms.empty()) throw Error(ErrorCode::InvalidArgument, "mark law needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.prob > 0.0) || a.prob > 1.0)
      throw Error(ErrorCode::InvalidArgument, "atom probabilities must lie in (0,1]");
    for (double m : a.marks)
      if (!std::isfinite(m)) throw Error(ErrorCode::InvalidArgument, "marks must be finite");
    total += a.prob;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::NotNormalized, "atom probabilities sum to " + std::to_string(total));

  MarkLaw law;
  law.mean_offspring_ = 0.0;
  double acc = 0.0;
  for (const auto& a : atoms) {
    law.mean_offspring_ += a.prob * static_cast<double>(a.marks.size());
    law.max_offspring_ = std::max(law.max_offspring_, a.marks.size());
    for (double m : a.marks) law.has_negative_ = law.has_negative_ || m < 0.0;
    acc += a.prob;
    law.cumulative_.push_back(acc / total);
  }
  law.cumulative_.back() = 1.0;
  if (law.mean_offspring_ <= 1.0)
    throw Error(ErrorCode::Subcritical,
                "mean offspring " + std::to_string(law.mean_offspring_) + " <= 1");
  law.atoms_ = std::move(atoms);
  return law;
}

namespace detail {

// log sum_i p_i sum_a exp(-t a) and the weighted first moment, computed with a
// common shift so that large |t a| does not overflow.
struct LogLaplace {
  double log_value;
  double mean_mark;  // sum p e^{-ta} a / sum p e^{-ta}
};

inline LogLaplace log_laplace(const MarkLaw& law, double t) {
  double shift = -kInf;
  for (const auto& atom : law.atoms())
    for (double a : atom.marks) shift = std::max(shift, std::log(atom.prob) - t * a);
  if (!std::isfinite(shift)) return {-kInf, 0.0};
  double s0 = 0.0, s1 = 0.0;
  for (const auto& atom : law.atoms())
    for (double a : atom.marks) {
      double w = std::exp(std::log(atom.prob) - t * a - shift);
      s0 += w;
      s1 += w * a;
    }
  return {shift + std::log(s0), s1 / s0};
}

}  // namespace detail

/// psi(t) = log E[sum_{|x|=1} e^{-t V(x)}].
inline double psi_evaluate(const MarkLaw& law, double t) {
  return detail::log_laplace(law, t).log_value;
}

inline double psi_derivative(const MarkLaw& law, double t) {
  return -detail::log_laplace(law, t).mean_mark;
}

inline double psi_second_derivative(const MarkLaw& law, double t) {
  // Variance of the mark under the exponentially tilted measure.
  auto ll = detail::log_laplace(law, t);
  double m = ll.mean_mark, s0 = 0.0, s2 = 0.0;
  for (const auto& atom : law.atoms())
    for (double a : atom.marks) {
      double w = std::exp(std::log(atom.prob) - t * a - ll.log_value);
      s0 += w;
      s2 += w * (a - m) * (a - m);
    }
  return s2 / s0;
}

inline constexpr double kKappaSearchMax = 64.0;
inline constexpr double kCalibrationTolerance = 1e-10;

/// Second zero of psi on (1, 64]; +infinity when there is none in the bracket.
inline double solve_kappa(const MarkLaw& law) {
  double psi1 = psi_evaluate(law, 1.0);
  double dpsi1 = psi_derivative(law, 1.0);
  if (std::abs(psi1) > kCalibrationTolerance)
    throw Error(ErrorCode::AssumptionViolation, "psi(1) = " + std::to_string(psi1) + " != 0");
  if (!(dpsi1 < 0.0))
    throw Error(ErrorCode::AssumptionViolation, "psi'(1) = " + std::to_string(dpsi1) + " >= 0");
  if (!law.has_negative_mark()) return kInf;

  // psi is convex with psi(1)=0, psi'(1)<0: scan for the first non-negative value.
  constexpr int kGrid = 64 * 63;
  double lo = 1.0, hi = 0.0;
  bool found = false;
  for (int i = 1; i <= kGrid; ++i) {
    double t = 1.0 + (kKappaSearchMax - 1.0) * i / kGrid;
    if (psi_evaluate(law, t) >= 0.0) {
      hi = t;
      found = true;
      break;
    }
    lo = t;
  }
  if (!found) return kInf;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (psi_evaluate(law, mid) < 0.0 ? lo : hi) = mid;
  }
  // Newton polish from the bracket end where psi >= 0 (convexity keeps it there).
  double t = hi;
  for (int it = 0; it < 5; ++it) {
    double f = psi_evaluate(law, t);
    double df = psi_derivative(law, t);
    if (df <= 0.0) break;
    double next = t - f / df;
    if (!(next > lo && next <= hi + 1e-12)) break;
    t = next;
  }
  return t;
}

enum class Regime { Subdiffusive, Critical, Diffusive };

inline const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Subdiffusive: return "SUBDIFFUSIVE";
    case Regime::Critical: return "CRITICAL";
    case Regime::Diffusive: return "DIFFUSIVE";
  }
  return "?";
}

inline Regime classify_regime(double kappa) {
  if (std::abs(kappa - 2.0) <= 1e-9) return Regime::Critical;
  return kappa < 2.0 ? Regime::Subdiffusive : Regime::Diffusive;
}

/// c_0 = E[sum_{x != y, |x|=|y|=1} e^{-V(x)-V(y)}] / (1 - e^{psi(2)}); only defined for kappa > 2.
inline std::optional<double> c0_exact(const MarkLaw& law) {
  double kappa = solve_kappa(law);
  if (!(kappa > 2.0)) return std::nullopt;
  double num = 0.0;
  for (const auto& atom : law.atoms()) {
    double s = 0.0, s2 = 0.0;
    for (double a : atom.marks) {
      s += std::exp(-a);
      s2 += std::exp(-2.0 * a);
    }
    num += atom.prob * (s * s - s2);
  }
  return num / (1.0 - std::exp(psi_evaluate(law, 2.0)));
}

/// True when all marks sit on a common lattice a + h Z (small-denominator test).
inline bool is_lattice(const MarkLaw& law) {
  std::vector<double> v;
  for (const auto& atom : law.atoms()) v.insert(v.end(), atom.marks.begin(), atom.marks.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
          v.end());
  if (v.size() <= 2) return true;
  double base = v[1] - v[0];
  for (std::size_t i = 2; i < v.size(); ++i) {
    double r = (v[i] - v[0]) / base;
    bool rational = false;
    for (int q = 1; q <= 1000 && !rational; ++q) rational = std::abs(r * q - std::round(r * q)) < 1e-9 * q;
    if (!rational) return false;
  }
  return true;
}

struct PotentialReport {
  std::vector<std::pair<double, double>> psi_table;
  double psi_1 = 0.0;
  double psi_prime_1 = 0.0;
  double kappa = kInf;
  std::optional<double> c0;
  Regime regime = Regime::Diffusive;
  bool lattice = false;
  double mean_offspring = 0.0;
  std::vector<std::string> warnings;
};

inline PotentialReport analyze_potential(const MarkLaw& law, std::size_t grid_points = 201) {
  PotentialReport rep;
  rep.psi_1 = psi_evaluate(law, 1.0);
  rep.psi_prime_1 = psi_derivative(law, 1.0);
  rep.kappa = solve_kappa(law);
  rep.regime = classify_regime(rep.kappa);
  rep.c0 = c0_exact(law);
  rep.lattice = is_lattice(law);
  rep.mean_offspring = law.mean_offspring();
  if (rep.lattice) rep.warnings.emplace_back("mark law is lattice; non-lattice assumption fails");
  if (!std::isfinite(rep.kappa)) rep.warnings.emplace_back("kappa is infinite within the search bracket");
  double t_hi = std::isfinite(rep.kappa) ? rep.kappa + 1.0 : 4.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    double t = t_hi * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    rep.psi_table.emplace_back(t, psi_evaluate(law, t));
  }
  return rep;
}

enum class CalibrationTarget { PositiveMarks, NegativeMarks };

/// Rescales the positive (or negative) marks by a common factor so that psi(1) = 0.
inline MarkLaw calibrate(const std::vector<Atom>& atoms, CalibrationTarget target) {
  auto scaled = [&](double s) {
    std::vector<Atom> out = atoms;
    for (auto& a : out)
      for (double& m : a.marks)
        if ((target == CalibrationTarget::PositiveMarks) == (m > 0.0)) m *= s;
    return out;
  };
  auto mass = [&](double s) {
    double tot = 0.0;
    for (const auto& a : scaled(s))
      for (double m : a.marks) tot += a.prob * std::exp(-m);
    return tot - 1.0;
  };
  // Positive-mark scaling decreases the mass; negative-mark scaling increases it.
  double sign = target == CalibrationTarget::PositiveMarks ? 1.0 : -1.0;
  double lo = 1e-9, hi = 1.0;
  auto f = [&](double s) { return sign * mass(s); };
  if (!(f(lo) > 0.0))
    throw Error(ErrorCode::AssumptionViolation, "calibration impossible: mass cannot reach 1");
  int guard = 0;
  while (f(hi) > 0.0) {
    hi *= 2.0;
    if (++guard > 200) throw Error(ErrorCode::AssumptionViolation, "calibration impossible: no bracket");
  }
  for (int it = 0; it < 300 && hi - lo > 1e-16 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  MarkLaw law = make_mark_law(scaled(0.5 * (lo + hi)));
  if (std::abs(psi_evaluate(law, 1.0)) > 1e-12)
    throw Error(ErrorCode::AssumptionViolation, "calibration did not reach psi(1)=0");
  return law;
}

/// Deterministic N-ary tree with every mark log(lambda): the lambda-biased walk.
inline MarkLaw constant_bias_law(double lambda, std::size_t offspring = 2) {
  return make_mark_law({Atom{1.0, std::vector<double>(offspring, std::log(lambda))}});
}

/// Binary tree, marks i.i.d. equal to -1 w.p. p and b w.p. 1-p, b solving
/// 2(p e + (1-p) e^{-b}) = 1 so that psi(1) = 0.
inline double two_point_b(double p) {
  double rest = 0.5 - p * std::exp(1.0);
  if (!(p > 0.0 && p < 1.0) || !(rest > 0.0))
    throw Error(ErrorCode::AssumptionViolation, "two-point family cannot be calibrated at p");
  return -std::log(rest / (1.0 - p));
}

inline MarkLaw two_point_law(double p) {
  double b = two_point_b(p);
  double q = 1.0 - p;
  return make_mark_law({Atom{p * p, {-1.0, -1.0}}, Atom{p * q, {-1.0, b}}, Atom{q * p, {b, -1.0}},
                        Atom{q * q, {b, b}}});
}

}  // namespace gwwalk
