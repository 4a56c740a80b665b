#include "lrtng/interval.hpp"

#include <numbers>
#include <ostream>

namespace lrtng {
namespace {

using namespace rounding;

// libm results are trusted to within this many ulps.
constexpr int kLibmSlack = 3;

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

// Beyond this magnitude trig enclosures fall back to their full range.
constexpr double kTrigReductionLimit = 1e15;

double libm_down(double v) { return nudge_down(v, kLibmSlack); }
double libm_up(double v) { return nudge_up(v, kLibmSlack); }

struct CriticalHits {
  bool even = false;
  bool odd = false;
};

// Reports which parities k the points phase + k*pi that can lie in [lo, hi]
// have. The tolerance over-reports near the endpoints, which only widens.
CriticalHits critical_points(double lo, double hi, double phase) {
  CriticalHits hits;
  const double k_lo = std::floor((lo - phase) / kPi) - 1.0;
  const double k_hi = std::ceil((hi - phase) / kPi) + 1.0;
  for (double k = k_lo; k <= k_hi; k += 1.0) {
    const double c = phase + k * kPi;
    const double tol = 4.0 * 0x1p-52 * (std::fabs(c) + 1.0);
    if (c >= lo - tol && c <= hi + tol) {
      if (std::fmod(std::fabs(k), 2.0) == 0.0) {
        hits.even = true;
      } else {
        hits.odd = true;
      }
    }
  }
  return hits;
}

Interval unit_range() { return make_unchecked(-1.0, 1.0); }

// sin for phase = pi/2 (maxima at even k), cos for phase = 0.
Interval trig(const Interval& a, double phase, double (*fn)(double)) {
  if (!a.is_finite() || a.hi() - a.lo() >= kTwoPi || std::fabs(a.lo()) > kTrigReductionLimit ||
      std::fabs(a.hi()) > kTrigReductionLimit) {
    return unit_range();
  }
  const double f_lo = fn(a.lo());
  const double f_hi = fn(a.hi());
  double lo = libm_down(std::min(f_lo, f_hi));
  double hi = libm_up(std::max(f_lo, f_hi));
  const CriticalHits hits = critical_points(a.lo(), a.hi(), phase);
  if (hits.even) hi = 1.0;
  if (hits.odd) lo = -1.0;
  return make_unchecked(std::max(lo, -1.0), std::min(hi, 1.0));
}

double pow_up_nonneg(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r = mul_up(r, x);
  return r;
}

double pow_down_nonneg(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r = mul_down(r, x);
  return r;
}

}  // namespace

Interval abs(const Interval& a) {
  if (a.lo() >= 0.0) return a;
  if (a.hi() <= 0.0) return -a;
  return make_unchecked(0.0, a.mag());
}

Interval sqr(const Interval& a) { return pow(a, 2); }

Interval pow(const Interval& a, int exponent) {
  if (exponent == 0) return Interval(1.0);
  if (exponent < 0) return Interval(1.0) / pow(a, -exponent);
  if (exponent == 1) return a;
  if (exponent % 2 == 0) {
    if (a.lo() >= 0.0) return make_unchecked(pow_down_nonneg(a.lo(), exponent), pow_up_nonneg(a.hi(), exponent));
    if (a.hi() <= 0.0) {
      return make_unchecked(pow_down_nonneg(-a.hi(), exponent), pow_up_nonneg(-a.lo(), exponent));
    }
    return make_unchecked(0.0, pow_up_nonneg(a.mag(), exponent));
  }
  // Odd exponents are monotone increasing.
  const double lo = a.lo() >= 0.0 ? pow_down_nonneg(a.lo(), exponent) : -pow_up_nonneg(-a.lo(), exponent);
  const double hi = a.hi() >= 0.0 ? pow_up_nonneg(a.hi(), exponent) : -pow_down_nonneg(-a.hi(), exponent);
  return make_unchecked(lo, hi);
}

Interval sqrt(const Interval& a) {
  if (a.lo() < 0.0) throw DomainError("sqrt of an interval with negative part");
  return make_unchecked(sqrt_down(a.lo()), sqrt_up(a.hi()));
}

Interval exp(const Interval& a) {
  const double lo = std::max(0.0, libm_down(std::exp(a.lo())));
  const double e_hi = std::exp(a.hi());
  const double hi = std::isfinite(e_hi) ? libm_up(e_hi) : e_hi;
  return make_unchecked(lo, hi);
}

Interval log(const Interval& a) {
  if (a.lo() <= 0.0) throw DomainError("ln of an interval with non-positive part");
  const double l_hi = std::log(a.hi());
  return make_unchecked(libm_down(std::log(a.lo())), std::isfinite(l_hi) ? libm_up(l_hi) : l_hi);
}

Interval sin(const Interval& a) { return trig(a, kHalfPi, static_cast<double (*)(double)>(std::sin)); }

Interval cos(const Interval& a) { return trig(a, 0.0, static_cast<double (*)(double)>(std::cos)); }

Interval tan(const Interval& a) {
  if (!a.is_finite() || a.hi() - a.lo() >= kPi || std::fabs(a.lo()) > kTrigReductionLimit ||
      std::fabs(a.hi()) > kTrigReductionLimit) {
    throw DomainError("tan over an interval containing a pole");
  }
  const CriticalHits poles = critical_points(a.lo(), a.hi(), kHalfPi);
  if (poles.even || poles.odd) throw DomainError("tan over an interval containing a pole");
  return make_unchecked(libm_down(std::tan(a.lo())), libm_up(std::tan(a.hi())));
}

Interval tanh(const Interval& a) {
  const double lo = std::max(-1.0, libm_down(std::tanh(a.lo())));
  const double hi = std::min(1.0, libm_up(std::tanh(a.hi())));
  return make_unchecked(lo, hi);
}

std::ostream& operator<<(std::ostream& os, const Interval& a) {
  return os << '[' << a.lo() << ", " << a.hi() << ']';
}

}  // namespace lrtng
