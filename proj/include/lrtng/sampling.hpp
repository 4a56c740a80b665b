#pragma once

// Monte-Carlo containment kernels: sample initial states, integrate them with
// plain RK4 and check every state against a sequence of boxes. The serial
// versions are the reference; the OpenMP versions must agree with them
// exactly (samples are independent and results are merged in sample order).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lrtng/interval_matrix.hpp"
#include "lrtng/tape.hpp"

namespace lrtng::sampling {

/// Points of the ellipsoid sum ((x_j - c_j) / r_j)^2 <= 1. Every fourth
/// point lies on the boundary (pulled in by 1e-12 relative). Dimension
/// `fixed`, if given, stays at its center value.
std::vector<Vector> sample_ellipsoid(const Vector& center, const Vector& radii, std::size_t count,
                                     std::uint64_t seed, std::optional<std::size_t> fixed = std::nullopt);

struct Violation {
  std::size_t sample = 0;
  std::size_t step = 0;
  std::size_t dim = 0;
  double value = 0.0;
  Interval box;
};

struct ContainmentReport {
  std::size_t samples = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::optional<Violation> first;
  /// Smallest distance from a state to its box boundary, relative to the box width.
  double min_relative_margin = std::numeric_limits<double>::infinity();

  void merge(const ContainmentReport& o);
};

/// Adapts a compiled tape to the kernel's rhs signature. Copies carry their
/// own scratch, so give each thread its own copy.
class TapeRhs {
 public:
  explicit TapeRhs(const Tape& tape) : tape_(&tape) {}
  void operator()(const double* x, double* dx) const {
    tape_->eval(std::span<const double>(x, tape_->num_inputs()), std::span<double>(dx, tape_->num_outputs()),
                scratch_);
  }

 private:
  const Tape* tape_;
  mutable std::vector<double> scratch_;
};

/// Classic RK4 over `span` in `substeps` equal steps, in place.
template <class Rhs>
void rk4_advance(const Rhs& f, std::size_t n, double* x, double span, std::size_t substeps,
                 std::vector<double>& work) {
  work.resize(5 * n);
  double* k1 = work.data();
  double* k2 = k1 + n;
  double* k3 = k2 + n;
  double* k4 = k3 + n;
  double* tmp = k4 + n;
  const double h = span / static_cast<double>(substeps);
  for (std::size_t s = 0; s < substeps; ++s) {
    f(x, k1);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
    f(tmp, k2);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
    f(tmp, k3);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + h * k3[j];
    f(tmp, k4);
    for (std::size_t j = 0; j < n; ++j) x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
}

/// States at every entry of `times` (times[0] is the start).
template <class Rhs>
std::vector<Vector> trajectory(const Rhs& f, const Vector& x0, const std::vector<double>& times,
                               std::size_t substeps) {
  std::vector<Vector> out;
  out.reserve(times.size());
  Vector x = x0;
  std::vector<double> work;
  out.push_back(x);
  for (std::size_t i = 1; i < times.size(); ++i) {
    rk4_advance(f, static_cast<std::size_t>(x.size()), x.data(), times[i] - times[i - 1], substeps, work);
    out.push_back(x);
  }
  return out;
}

namespace detail {

template <class Rhs>
ContainmentReport check_one(const Rhs& f, std::size_t index, const Vector& x0, const std::vector<double>& times,
                            const std::vector<Box>& boxes, std::size_t substeps, std::vector<double>& work) {
  ContainmentReport rep;
  rep.samples = 1;
  const std::size_t n = static_cast<std::size_t>(x0.size());
  std::vector<double> x(x0.data(), x0.data() + n);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) rk4_advance(f, n, x.data(), times[i] - times[i - 1], substeps, work);
    const Box& b = boxes[i];
    for (std::size_t j = 0; j < n; ++j) {
      ++rep.checks;
      const double w = b[j].hi() - b[j].lo();
      const double margin = std::min(x[j] - b[j].lo(), b[j].hi() - x[j]);
      if (w > 0) rep.min_relative_margin = std::min(rep.min_relative_margin, margin / w);
      if (!b[j].contains(x[j])) {
        if (rep.violations++ == 0) rep.first = Violation{index, i, j, x[j], b[j]};
      }
    }
  }
  return rep;
}

}  // namespace detail

inline void ContainmentReport::merge(const ContainmentReport& o) {
  samples += o.samples;
  checks += o.checks;
  if (!first && o.first) first = o.first;
  violations += o.violations;
  min_relative_margin = std::min(min_relative_margin, o.min_relative_margin);
}

/// Reference implementation, one sample after the other.
template <class Rhs>
ContainmentReport containment_serial(const Rhs& f, const std::vector<Vector>& samples,
                                     const std::vector<double>& times, const std::vector<Box>& boxes,
                                     std::size_t substeps) {
  ContainmentReport total;
  std::vector<double> work;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    total.merge(detail::check_one(f, s, samples[s], times, boxes, substeps, work));
  }
  return total;
}

/// OpenMP version; identical result to containment_serial.
template <class Rhs>
ContainmentReport containment_parallel(const Rhs& f, const std::vector<Vector>& samples,
                                       const std::vector<double>& times, const std::vector<Box>& boxes,
                                       std::size_t substeps) {
  std::vector<ContainmentReport> per(samples.size());
  const auto count = static_cast<std::int64_t>(samples.size());
#pragma omp parallel
  {
    const Rhs local = f;
    std::vector<double> work;
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t s = 0; s < count; ++s) {
      const auto i = static_cast<std::size_t>(s);
      per[i] = detail::check_one(local, i, samples[i], times, boxes, substeps, work);
    }
  }
  ContainmentReport total;
  for (const auto& r : per) total.merge(r);
  return total;
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace lrtng::sampling
