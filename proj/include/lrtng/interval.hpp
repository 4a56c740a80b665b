#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <optional>

#include "lrtng/errors.hpp"
#include "lrtng/rounding.hpp"

namespace lrtng {

/// Closed interval [lo, hi] of doubles. Arithmetic is outward rounded so the
/// result always contains the exact real-valued result set.
class Interval {
 public:
  constexpr Interval() = default;
  // Implicit on purpose: lets a double participate in interval expressions.
  constexpr Interval(double x) : lo_(x), hi_(x) {}  // NOLINT
  Interval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo <= hi)) throw UsageError("interval with lo > hi or NaN endpoint");
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// A representable point inside the interval, close to the center.
  double mid() const {
    if (lo_ == hi_) return lo_;
    if (lo_ == -rounding::kInf || hi_ == rounding::kInf) return lo_ == -hi_ ? 0.0 : (lo_ == -rounding::kInf ? -rounding::kMax : rounding::kMax);
    const double m = 0.5 * lo_ + 0.5 * hi_;
    return std::clamp(m, lo_, hi_);
  }
  /// Upper bound on the distance from mid() to either endpoint.
  double rad() const {
    const double m = mid();
    return std::max(rounding::sub_up(hi_, m), rounding::sub_up(m, lo_));
  }
  double width() const { return rounding::sub_up(hi_, lo_); }
  /// max |x| over the interval.
  double mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }
  /// min |x| over the interval.
  double mig() const {
    if (lo_ <= 0.0 && hi_ >= 0.0) return 0.0;
    return std::min(std::fabs(lo_), std::fabs(hi_));
  }

  bool contains(double x) const { return lo_ <= x && x <= hi_; }
  bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }
  bool subset_of(const Interval& o) const { return o.lo_ <= lo_ && hi_ <= o.hi_; }
  bool is_point() const { return lo_ == hi_; }
  bool is_finite() const { return std::isfinite(lo_) && std::isfinite(hi_); }

  Interval& operator+=(const Interval& o);
  Interval& operator-=(const Interval& o);
  Interval& operator*=(const Interval& o);
  Interval& operator/=(const Interval& o);

  friend bool operator==(const Interval& a, const Interval& b) = default;

 private:
  // Private constructor that trusts its arguments (used by the kernel).
  struct Unchecked {};
  constexpr Interval(double lo, double hi, Unchecked) : lo_(lo), hi_(hi) {}
  friend Interval make_unchecked(double lo, double hi);

  double lo_ = 0.0;
  double hi_ = 0.0;
};

inline Interval make_unchecked(double lo, double hi) { return Interval(lo, hi, Interval::Unchecked{}); }

inline Interval operator-(const Interval& a) { return make_unchecked(-a.hi(), -a.lo()); }

inline Interval operator+(const Interval& a, const Interval& b) {
  return make_unchecked(rounding::add_down(a.lo(), b.lo()), rounding::add_up(a.hi(), b.hi()));
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return make_unchecked(rounding::sub_down(a.lo(), b.hi()), rounding::sub_up(a.hi(), b.lo()));
}

inline Interval operator*(const Interval& a, const Interval& b) {
  using namespace rounding;
  if (a.is_point() && b.is_point()) {
    return make_unchecked(mul_down(a.lo(), b.lo()), mul_up(a.lo(), b.lo()));
  }
  if (a.lo() >= 0.0 && b.lo() >= 0.0) {
    return make_unchecked(mul_down(a.lo(), b.lo()), mul_up(a.hi(), b.hi()));
  }
  const double lo = std::min({mul_down(a.lo(), b.lo()), mul_down(a.lo(), b.hi()), mul_down(a.hi(), b.lo()),
                              mul_down(a.hi(), b.hi())});
  const double hi = std::max({mul_up(a.lo(), b.lo()), mul_up(a.lo(), b.hi()), mul_up(a.hi(), b.lo()),
                              mul_up(a.hi(), b.hi())});
  return make_unchecked(lo, hi);
}

inline Interval operator/(const Interval& a, const Interval& b) {
  using namespace rounding;
  if (b.contains_zero()) throw DomainError("division by an interval containing zero");
  const double lo = std::min({div_down(a.lo(), b.lo()), div_down(a.lo(), b.hi()), div_down(a.hi(), b.lo()),
                              div_down(a.hi(), b.hi())});
  const double hi = std::max({div_up(a.lo(), b.lo()), div_up(a.lo(), b.hi()), div_up(a.hi(), b.lo()),
                              div_up(a.hi(), b.hi())});
  return make_unchecked(lo, hi);
}

inline Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
inline Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
inline Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }
inline Interval& Interval::operator/=(const Interval& o) { return *this = *this / o; }

/// Interval spanning both operands.
inline Interval hull(const Interval& a, const Interval& b) {
  return make_unchecked(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

/// Exact intersection; std::nullopt when the operands are disjoint.
inline std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  const double lo = std::max(a.lo(), b.lo());
  const double hi = std::min(a.hi(), b.hi());
  if (lo > hi) return std::nullopt;
  return make_unchecked(lo, hi);
}

/// [x - r, x + r] rounded outward.
inline Interval ball(double center, double radius) {
  return make_unchecked(rounding::sub_down(center, radius), rounding::add_up(center, radius));
}

/// Symmetric inflation by an absolute amount.
inline Interval inflate(const Interval& a, double amount) {
  return make_unchecked(rounding::sub_down(a.lo(), amount), rounding::add_up(a.hi(), amount));
}

Interval abs(const Interval& a);
Interval sqr(const Interval& a);
Interval pow(const Interval& a, int exponent);
Interval sqrt(const Interval& a);
Interval exp(const Interval& a);
Interval log(const Interval& a);
Interval sin(const Interval& a);
Interval cos(const Interval& a);
Interval tan(const Interval& a);
Interval tanh(const Interval& a);

std::ostream& operator<<(std::ostream& os, const Interval& a);

}  // namespace lrtng
