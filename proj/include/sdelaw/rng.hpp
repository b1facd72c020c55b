#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdelaw {

/// Counter-based random stream: every variate is a pure function of
/// (seed, stream, index), so chunked or threaded consumers reproduce the
/// same values regardless of evaluation order.
struct CounterRng {
  std::uint64_t seed;

  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const {
    return mix64(mix64(mix64(seed) ^ stream) ^ (index * 0xda942042e4dd58b5ULL));
  }

  /// Uniform variate in the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    return (static_cast<double>(bits(stream, index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two counter slots.
  double normal(std::uint64_t stream, std::uint64_t index) const {
    const double u1 = uniform(stream, 2 * index);
    const double u2 = uniform(stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

}  // namespace sdelaw
