#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "ials/core/error.hpp"

namespace ials {

namespace detail {

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Seed of the sub-stream `label` derived from `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return detail::mix64(detail::mix64(seed) ^ detail::fnv1a(label));
}

/// Deterministic random stream. Every draw goes through the raw 64-bit engine
/// output so sequences are identical across standard library implementations.
///
/// `split(label)` depends only on the construction seed and the label, never on
/// how many values have been drawn, so sub-streams can be derived in any order.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng split(std::string_view label) const { return Rng(derive_seed(seed_, label)); }
  Rng split(std::string_view label, std::uint64_t index) const {
    return Rng(detail::mix64(derive_seed(seed_, label) + index));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw ConfigError("uniform_int: n must be positive");
    // Lemire's multiply-shift; bias is < n / 2^64 and irrelevant here.
    const auto r = static_cast<unsigned __int128>(engine_()) * static_cast<unsigned>(n);
    return static_cast<int>(r >> 64);
  }

  /// Index drawn from an (unnormalized, non-negative) weight vector.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw NumericError("categorical: weights must have positive mass");
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (u < weights[i]) return static_cast<int>(i);
      u -= weights[i];
    }
    // rounding: fall back to the last index with positive weight
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return static_cast<int>(i);
    }
    return 0;
  }

  Engine& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  Engine engine_;
};

}  // namespace ials
