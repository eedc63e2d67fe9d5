#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mitoforge {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Every random quantity in
// the library is derived from this function so results are reproducible
// across platforms and standard-library implementations.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Per-item seed: mix64(seed + golden * (index + 1)). Depends only on the base
// seed and the item index, never on processing order.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t index) noexcept {
  return mix64(seed + kGoldenGamma * (index + 1));
}

// Counter-based stream: the i-th draw (i = 1, 2, ...) is
// mix64(seed + golden * i), i.e. the SplitMix64 sequence.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(seed_ + kGoldenGamma * counter_);
  }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi); returns lo exactly when lo == hi.
  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_unit();
  }

  // Uniform integer in [0, n). Multiply-shift on the 53-bit unit value.
  std::uint64_t below(std::uint64_t n) noexcept {
    auto v = static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  // Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept {
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace mitoforge
