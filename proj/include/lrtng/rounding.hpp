#pragma once

// Directed rounding without touching the floating-point environment.
//
// Every function returns a double that is a lower (…_down) or upper (…_up)
// bound of the exact real result. Error-free transformations (TwoSum, FMA
// residuals) decide whether the round-to-nearest result is already on the
// correct side; only when it is not is it moved one representable value.
// Near the underflow range the transformations are no longer exact and the
// result is nudged unconditionally.

#include <cmath>
#include <limits>

namespace lrtng::rounding {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMax = std::numeric_limits<double>::max();
// Below this magnitude FMA residuals may be inexact (2^-968).
inline constexpr double kTiny = 0x1p-968;

inline double next_up(double x) { return std::nextafter(x, kInf); }
inline double next_down(double x) { return std::nextafter(x, -kInf); }

/// Moves x outward by k ulps.
inline double nudge_up(double x, int k) {
  for (int i = 0; i < k; ++i) x = next_up(x);
  return x;
}
inline double nudge_down(double x, int k) {
  for (int i = 0; i < k; ++i) x = next_down(x);
  return x;
}

inline double add_down(double a, double b) {
  const double s = a + b;
  if (!std::isfinite(s)) {
    if (s == kInf && std::isfinite(a) && std::isfinite(b)) return kMax;
    return s;
  }
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err < 0.0 ? next_down(s) : s;
}

inline double add_up(double a, double b) {
  const double s = a + b;
  if (!std::isfinite(s)) {
    if (s == -kInf && std::isfinite(a) && std::isfinite(b)) return -kMax;
    return s;
  }
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err > 0.0 ? next_up(s) : s;
}

inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b) { return add_up(a, -b); }

inline double mul_down(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  const double p = a * b;
  if (!std::isfinite(p)) {
    if (p == kInf && std::isfinite(a) && std::isfinite(b)) return kMax;
    return p;
  }
  if (std::fabs(p) < kTiny) return next_down(p);
  const double err = std::fma(a, b, -p);
  return err < 0.0 ? next_down(p) : p;
}

inline double mul_up(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  const double p = a * b;
  if (!std::isfinite(p)) {
    if (p == -kInf && std::isfinite(a) && std::isfinite(b)) return -kMax;
    return p;
  }
  if (std::fabs(p) < kTiny) return next_up(p);
  const double err = std::fma(a, b, -p);
  return err > 0.0 ? next_up(p) : p;
}

// Sign of (a/b - q) equals sign(a - q*b) * sign(b).
inline double div_down(double a, double b) {
  if (a == 0.0) return 0.0;
  const double q = a / b;
  if (!std::isfinite(q)) {
    if (q == kInf && std::isfinite(a)) return kMax;
    return q;
  }
  if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return next_down(q);
  const double r = std::fma(-q, b, a);
  const double err = b > 0.0 ? r : -r;
  return err < 0.0 ? next_down(q) : q;
}

inline double div_up(double a, double b) {
  if (a == 0.0) return 0.0;
  const double q = a / b;
  if (!std::isfinite(q)) {
    if (q == -kInf && std::isfinite(a)) return -kMax;
    return q;
  }
  if (std::fabs(q) < kTiny || std::fabs(a) < kTiny) return next_up(q);
  const double r = std::fma(-q, b, a);
  const double err = b > 0.0 ? r : -r;
  return err > 0.0 ? next_up(q) : q;
}

inline double sqrt_down(double a) {
  const double s = std::sqrt(a);
  if (s == 0.0 || !std::isfinite(s)) return s;
  if (a < kTiny) return next_down(s);
  const double r = std::fma(-s, s, a);
  return r < 0.0 ? next_down(s) : s;
}

inline double sqrt_up(double a) {
  const double s = std::sqrt(a);
  if (s == 0.0 || !std::isfinite(s)) return s;
  if (a < kTiny) return next_up(s);
  const double r = std::fma(-s, s, a);
  return r > 0.0 ? next_up(s) : s;
}

}  // namespace lrtng::rounding
