#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gwwalk/mark_law.hpp"
#include "gwwalk/rng.hpp"

namespace gwwalk {

/// Increment law of the one-dimensional walk given by the many-to-one formula:
/// P(S_1 = a) = E[sum_{|x|=1} e^{-V(x)} 1{V(x) = a}].
class SWalkIncrements {
 public:
  explicit SWalkIncrements(const MarkLaw& law) {
    for (const auto& atom : law.atoms())
      for (double a : atom.marks) {
        values_.push_back(a);
        weights_.push_back(atom.prob * std::exp(-a));
      }
    double total = 0.0;
    for (double w : weights_) total += w;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      weights_[i] /= total;
      acc += weights_[i];
      cumulative_.push_back(acc);
      drift_ += weights_[i] * values_[i];
    }
    cumulative_.back() = 1.0;
  }

  /// E[S_1] = -psi'(1).
  double drift() const noexcept { return drift_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& probabilities() const noexcept { return weights_; }

  template <class Gen>
  double sample(Gen& g) const {
    double u = uniform01(g);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return values_[std::min(idx, values_.size() - 1)];
  }

 private:
  std::vector<double> values_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  double drift_ = 0.0;
};

/// S_0 = 0, ..., S_n.
template <class Gen>
std::vector<double> sample_s_walk(const SWalkIncrements& inc, std::size_t n, Gen& g) {
  std::vector<double> s(n + 1, 0.0);
  for (std::size_t j = 1; j <= n; ++j) s[j] = s[j - 1] + inc.sample(g);
  return s;
}

/// sum_{j>=0} e^{-S_j}, truncated once the geometric tail bound at half the
/// drift drops below eps (never before min_terms terms).
template <class Gen>
double discounted_sum(const SWalkIncrements& inc, Gen& g, double eps = 1e-12,
                      std::size_t min_terms = 512, std::size_t max_terms = 1u << 24) {
  const double delta = 0.5 * inc.drift();
  const double tail_factor = 1.0 / (1.0 - std::exp(-delta));
  double s = 0.0, total = 1.0;
  for (std::size_t j = 1; j < max_terms; ++j) {
    s += inc.sample(g);
    double term = std::exp(-s);
    total += term;
    if (j >= min_terms && term * tail_factor < eps) break;
  }
  return total;
}

}  // namespace gwwalk
