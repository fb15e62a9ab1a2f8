#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsq {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of path `index` in a run with base seed `base`.
inline constexpr std::uint64_t path_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(mix64(base) ^ (index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

/// Derived stream for auxiliary randomness (pilot runs and the like).
inline constexpr std::uint64_t sub_seed(std::uint64_t base, std::uint64_t salt) noexcept {
  return mix64(base + mix64(salt));
}

/// Counter-based SplitMix64: the k-th draw depends only on (seed, k), so a path
/// is reproducible from its seed alone and prefixes agree across horizons.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : key_(seed) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two draws per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rsq
