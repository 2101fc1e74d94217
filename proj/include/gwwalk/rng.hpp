#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace gwwalk {

// SplitMix64 finalizer. Used both as the generator step and as the hash that
// derives substream keys, so that a key never depends on consumption order.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (mix64(b + 0x9e3779b97f4a7c15ULL) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

constexpr std::uint64_t hash_label(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

/// Small counter-based generator satisfying UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Uniform on [0,1) with 53 random bits.
template <class Gen>
inline double uniform01(Gen& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform on (0,1], safe for logarithms.
template <class Gen>
inline double uniform_open0(Gen& g) {
  return (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;
}

template <class Gen>
inline double exponential1(Gen& g) {
  return -std::log(uniform_open0(g));
}

// Seed discipline: master seed -> (experiment, trial, role) substreams.
enum class StreamRole : std::uint64_t { Environment = 1, Walk = 2, Bootstrap = 3, Auxiliary = 4 };

inline std::uint64_t substream_seed(std::uint64_t master, std::string_view experiment,
                                    std::uint64_t trial, StreamRole role) {
  std::uint64_t k = combine_keys(master, hash_label(experiment));
  k = combine_keys(k, trial);
  return combine_keys(k, static_cast<std::uint64_t>(role));
}

}  // namespace gwwalk
