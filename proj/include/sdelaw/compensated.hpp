#pragma once

#include <cmath>
#include <numbers>
#include <cstdint>

namespace sdelaw {

/// Kahan compensated accumulator. Drop-in for plain `sum += x` loops where
/// the terms cancel heavily or the term count is large.
template <typename Value = double>
struct KahanSum {
  Value sum = Value{0};
  Value compensation = Value{0};

  void add(Value value) {
    const Value y = value - compensation;
    const Value t = sum + y;
    compensation = (t - sum) - y;
    sum = t;
  }

  KahanSum& operator+=(Value value) {
    add(value);
    return *this;
  }

  /// Merge another accumulator (associative up to rounding).
  void merge(const KahanSum& other) {
    add(other.sum);
    add(other.compensation);
  }

  Value value() const { return sum; }
  operator Value() const { return sum; }
};

/// Product k*x split into high and low parts (Dekker/FMA two-product).
struct TwoProd {
  double hi;
  double lo;
};

inline TwoProd two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

/// Reduce k*x modulo 2*pi keeping the low-order product bits, for
/// trigonometric arguments like (N + 1/2)(xi + h) where k can be large.
inline double reduce_angle(double k, double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const TwoProd p = two_prod(k, x);
  const double n = std::floor(p.hi / two_pi);
  return (p.hi - n * two_pi) + p.lo;
}

}  // namespace sdelaw
