#pragma once

#include <cmath>
#include <cstdint>

namespace samdh {

/// splitmix64. Every random draw in the system derives from one of these, so
/// runs are reproducible across platforms.
class SplitMix64 {
public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Exponential with the given rate (events per unit time).
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  std::uint64_t state() const noexcept { return state_; }

private:
  std::uint64_t state_;
};

/// Stateless mix of a value, used for hashing and seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept { return SplitMix64(x).next(); }

}  // namespace samdh
