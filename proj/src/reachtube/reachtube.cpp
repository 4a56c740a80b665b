#include "lrtng/reachtube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include <spdlog/spdlog.h>

#include "lrtng/errors.hpp"
#include "lrtng/format.hpp"

namespace lrtng {
namespace {

using namespace rounding;
using Index = std::vector<std::size_t>;

double norm2_upper(const Box& v) {
  double s = 0.0;
  for (const Interval& e : v) s = add_up(s, mul_up(e.mag(), e.mag()));
  return sqrt_up(s);
}

Box pick(const Box& b, const Index& idx) {
  Box out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = b[idx[k]];
  return out;
}

Vector pick(const Vector& v, const Index& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[static_cast<Eigen::Index>(idx[k])];
  return out;
}

IntervalMatrix pick(const IntervalMatrix& m, const Index& rows, const Index& cols) {
  IntervalMatrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

Matrix pick(const Matrix& m, const Index& rows, const Index& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          m(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    }
  }
  return out;
}

Index all_but(std::size_t n, std::optional<std::size_t> skip) {
  Index out;
  for (std::size_t j = 0; j < n; ++j) {
    if (!skip || *skip != j) out.push_back(j);
  }
  return out;
}

// Upper bound of ||A v||_2 over v in [v].
double metric_norm(const Matrix& A, const Box& v) { return norm2_upper(A * v); }

// Column `col` of m restricted to `rows`, as a box.
Box column(const IntervalMatrix& m, const Index& rows, std::size_t col) {
  Box out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = m(rows[k], col);
  return out;
}

}  // namespace

Box box_hull_ellipsoid(const CoordFrame& frame, const Vector& c, double delta) {
  if (!(delta >= 0.0)) throw UsageError("ellipsoid radius must be non-negative");
  const std::size_t n = frame.A_inv.rows();
  if (static_cast<std::size_t>(c.size()) != n) throw UsageError("center and frame dimensions differ");
  Box out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double m = frame.A_inv(j, k).mag();
      s = add_up(s, mul_up(m, m));
    }
    out[j] = ball(c[static_cast<Eigen::Index>(j)], mul_up(delta, sqrt_up(s)));
  }
  return out;
}

Box box_hull_intersection(const CoordFrame& a, double da, const CoordFrame& b, double db, const Vector& c) {
  auto out = intersect(box_hull_ellipsoid(a, c, da), box_hull_ellipsoid(b, c, db));
  if (!out) throw SoundnessError("ellipsoid and ball hulls do not meet");
  if (da == 0.0 || db == 0.0) return *out;
  const Eigen::Index n = c.size();
  // Every point of both sets satisfies lam q_a + mu q_b <= lam + mu, with
  // q_a = ||A y||^2 / da^2 and q_b likewise; each such combination is an
  // ellipsoid whose extent along axis j is sqrt((lam + mu) (M^-1)_jj).
  const Matrix P = a.A.transpose() * a.A / (da * da);
  const Matrix Q = b.A.transpose() * b.A / (db * db);
  const Interval da2 = sqr(Interval(da)), db2 = sqr(Interval(db));
  const IntervalMatrix P_enc = (Interval(1.0) / da2) * product_enclosure(a.A.transpose(), a.A);
  const IntervalMatrix Q_enc = (Interval(1.0) / db2) * product_enclosure(b.A.transpose(), b.A);
  for (Eigen::Index j = 0; j < n; ++j) {
    auto extent = [&](double lam) {
      Eigen::LLT<Matrix> llt(lam * P + (1.0 - lam) * Q);
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      return llt.solve(Vector::Unit(n, j))[j];
    };
    // The extent is convex in lam (matrix inversion is operator convex).
    double lo = 0.0, hi = 1.0;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = extent(x1), f2 = extent(x2);
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = extent(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = extent(x2);
      }
    }
    const double lam = 0.5 * (lo + hi);
    const double mu = 1.0 - lam;
    if (!(lam > 1e-9 && mu > 1e-9)) continue;  // the endpoint hulls are already in `out`
    const IntervalMatrix M = Interval(lam) * P_enc + Interval(mu) * Q_enc;
    Eigen::LLT<Matrix> llt(M.mid());
    if (llt.info() != Eigen::Success) continue;
    IntervalMatrix inv;
    try {
      inv = verified_inverse(M, llt.solve(Matrix::Identity(n, n)));
    } catch (const FrameDegeneracyError&) {
      continue;
    }
    const std::size_t jj = static_cast<std::size_t>(j);
    const double extent_hi = inv(jj, jj).hi();
    if (!(extent_hi >= 0.0)) continue;
    const double r = sqrt_up(mul_up(add_up(lam, mu), extent_hi));
    if (auto tighter = intersect((*out)[jj], ball(c[j], r))) (*out)[jj] = *tighter;
  }
  return *out;
}

std::size_t step_count(double dt, double horizon) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be positive and finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw UsageError("horizon must be positive and finite");
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  // 9 / 0.01 is 900.0000000000001 in binary; treat that as 900 steps.
  if (nearest >= 1.0 && std::fabs(ratio - nearest) <= 1e-9 * nearest) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

Matrix embedded_frame(const ReachsetStep& s, std::size_t n, std::optional<std::size_t> time_index) {
  const Index dims = all_but(n, time_index);
  if (static_cast<std::size_t>(s.frame.A.rows()) != dims.size()) throw UsageError("frame does not match dimension");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < dims.size(); ++r) {
    for (std::size_t c = 0; c < dims.size(); ++c) {
      out(static_cast<Eigen::Index>(dims[r]), static_cast<Eigen::Index>(dims[c])) =
          s.frame.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

ReachsetStep initial_step(const InitialSet& init, std::optional<std::size_t> time_index) {
  const Eigen::Index n = init.center.size();
  if (n == 0 || init.radii.size() != n) throw UsageError("initial set needs matching center and radii");
  if (!init.center.allFinite()) throw UsageError("initial center must be finite");
  if (time_index && *time_index >= static_cast<std::size_t>(n)) throw UsageError("time variable out of range");
  const Index dims = all_but(static_cast<std::size_t>(n), time_index);
  if (dims.empty()) throw UsageError("no state besides the time variable");
  ReachsetStep s;
  s.center = init.center;
  s.frame = CoordFrame::diagonal(pick(init.radii, dims));
  s.delta = 1.0;
  s.delta_M0 = 1.0;
  // The hull of a diagonal ellipsoid is the box of its radii.
  s.enclosure = Box::around(init.center, init.radii);
  s.vol_ellipsoid = ellipsoid_volume(s.frame, 1.0);
  s.vol_ball = s.vol_ellipsoid;
  s.vol_box = s.enclosure.volume(time_index);
  return s;
}

struct Reachtube::Impl {
  OdeSystem sys;
  RunConfig cfg;
  Integrator integ;
  std::optional<std::size_t> time_index;
  // Coordinates the metric lives on (all but the time variable).
  Index dims;
  CoordFrame A0;
  std::size_t total = 0;
  GradientEnclosure g;
  ReachsetStep cur;
  // Exact enclosure of the elapsed time.
  Interval elapsed{0.0};

  Impl(const OdeSystem& s, RunConfig c) : sys(s), cfg(std::move(c)), integ(s, cfg.order, cfg.picard) {
    if (static_cast<std::size_t>(cfg.initial.center.size()) != sys.dim()) {
      throw UsageError("initial set has dimension " + std::to_string(cfg.initial.center.size()) + ", model has " +
                       std::to_string(sys.dim()));
    }
    time_index = cfg.time_index ? cfg.time_index : sys.time_index();
    dims = all_but(sys.dim(), time_index);
    total = step_count(cfg.dt, cfg.horizon);
    cur = initial_step(cfg.initial, time_index);
    A0 = cur.frame;
    g = GradientEnclosure::identity(sys.dim());
  }

  double time_radius() const { return time_index ? cfg.initial.radii[static_cast<Eigen::Index>(*time_index)] : 0.0; }

  // Time coordinate of every trajectory from the initial set.
  Interval time_hull(const Interval& t) const {
    const double c = cfg.initial.center[static_cast<Eigen::Index>(*time_index)];
    return ball(c, time_radius()) + t;
  }

  // Restriction of a gradient to the metric coordinates.
  GradientEnclosure restrict(const GradientEnclosure& full) const {
    if (!time_index) return full;
    const Index every = all_but(sys.dim(), std::nullopt);
    GradientEnclosure out;
    out.Q = pick(full.Q, dims, every);
    out.R = pick(full.R, every, dims);
    out.total = pick(full.total, dims, dims);
    out.mid_total = pick(full.mid_total, dims, dims);
    out.one_step = pick(full.one_step, dims, dims);
    out.mid_one_step = pick(full.mid_one_step, dims, dims);
    return out;
  }

  const ReachsetStep& advance() {
    if (cur.index >= total) throw UsageError("reachtube already reached its horizon");
    const std::size_t i = cur.index + 1;
    const double t_prev = cur.t;
    const double t_next = i == total ? cfg.horizon : cfg.dt * static_cast<double>(i);
    const double h = i == total ? cfg.horizon - t_prev : cfg.dt;
    const Interval elapsed_next = elapsed + Interval(h);

    const StepEnclosure center_step = integ.validated_step(Box::point(cur.center), h);
    const Vector x = center_step.y_next.mid();
    const GradientEnclosure next_full = integ.step_gradient(cur.enclosure, g, h);
    const GradientEnclosure next_g = restrict(next_full);
    const CoordFrame frame = optimal_frame(A0, next_g.mid_total);

    const double lam_0i = stretching_factor(frame, next_g, A0.A_inv);
    const double lam_iM0 = stretching_factor(A0, next_g, A0.A_inv);

    // The true center lies in both sigma balls around the previous center,
    // so a gradient over their (much smaller) box suffices for sigma.
    IntervalMatrix C = next_full.one_step;
    Interval center_time_gap(0.0);
    if (cur.index > 0) {
      Box sigma_box = cur.enclosure;
      const Vector xs = pick(cur.center, dims);
      const Box sb = box_hull_ellipsoid(cur.frame, xs, cur.sigma);
      const auto both = intersect(sb, box_hull_ellipsoid(A0, xs, cur.sigma_M0));
      if (both) {
        for (std::size_t k = 0; k < dims.size(); ++k) sigma_box[dims[k]] = (*both)[k];
      }
      if (time_index) {
        const std::size_t ti = *time_index;
        const double xt = cur.center[static_cast<Eigen::Index>(ti)];
        const Interval true_t = cfg.initial.center[static_cast<Eigen::Index>(ti)] + elapsed;
        sigma_box[ti] = hull(true_t, Interval(xt));
        center_time_gap = true_t - Interval(xt);
      }
      if (auto tighter = intersect(C, integ.one_step_gradient(sigma_box, h))) C = *tighter;
    }
    const IntervalMatrix C_S = pick(C, dims, dims);
    const double lam_prev = stretching_factor(frame, C_S, cur.frame.A_inv);
    const double lam_prev_M0 = stretching_factor(A0, C_S, A0.A_inv);

    ReachsetStep s;
    s.index = i;
    s.t = t_next;
    s.center = x;
    s.frame = frame;
    const Box center_error = pick(center_step.y_next - Box::point(x), dims);
    s.epsilon = metric_norm(frame.A, center_error);
    s.epsilon_M0 = metric_norm(A0.A, center_error);
    double spread = 0.0, spread_M0 = 0.0;
    if (time_index) {
      // Time offsets couple into the metric coordinates through the time
      // column of the gradient.
      const Box c_t = column(C, dims, *time_index);
      const Interval gap(-center_time_gap.mag(), center_time_gap.mag());
      s.epsilon = add_up(s.epsilon, metric_norm(frame.A, gap * c_t));
      s.epsilon_M0 = add_up(s.epsilon_M0, metric_norm(A0.A, gap * c_t));
      const Box f_t = column(next_full.total, dims, *time_index);
      const Interval r_t(-time_radius(), time_radius());
      spread = metric_norm(frame.A, r_t * f_t);
      spread_M0 = metric_norm(A0.A, r_t * f_t);
    }
    s.sigma = add_up(mul_up(lam_prev, cur.sigma), s.epsilon);
    s.sigma_M0 = add_up(mul_up(lam_prev_M0, cur.sigma_M0), s.epsilon_M0);
    s.delta = add_up(add_up(lam_0i, s.sigma), spread);
    s.delta_M0 = add_up(add_up(lam_iM0, s.sigma_M0), spread_M0);

    const Vector xs = pick(x, dims);
    Box reduced = box_hull_ellipsoid(frame, xs, s.delta);
    if (cfg.intersect) {
      try {
        reduced = box_hull_intersection(frame, s.delta, A0, s.delta_M0, xs);
      } catch (const SoundnessError&) {
        throw SoundnessError("empty ellipsoid/ball intersection at t=" + format_double(t_next));
      }
    }
    s.enclosure = Box(sys.dim());
    for (std::size_t k = 0; k < dims.size(); ++k) s.enclosure[dims[k]] = reduced[k];
    if (time_index) s.enclosure[*time_index] = time_hull(elapsed_next);

    s.vol_ellipsoid = ellipsoid_volume(frame, s.delta);
    s.vol_ball = ellipsoid_volume(A0, s.delta_M0);
    s.vol_box = s.enclosure.volume(time_index);
    spdlog::debug("step {} t={} delta={} delta_M0={} sigma={} eps={} lambda={} {} {} {} vol_box={}", i, t_next, s.delta,
                  s.delta_M0, s.sigma, s.epsilon, lam_0i, lam_iM0, lam_prev, lam_prev_M0, s.vol_box);
    g = next_full;
    elapsed = elapsed_next;
    cur = std::move(s);
    return cur;
  }
};

Reachtube::Reachtube(const OdeSystem& sys, RunConfig cfg) : impl_(std::make_unique<Impl>(sys, std::move(cfg))) {}
Reachtube::~Reachtube() = default;
Reachtube::Reachtube(Reachtube&&) noexcept = default;
Reachtube& Reachtube::operator=(Reachtube&&) noexcept = default;

const RunConfig& Reachtube::config() const { return impl_->cfg; }
const ReachsetStep& Reachtube::current() const { return impl_->cur; }
const GradientEnclosure& Reachtube::gradient() const { return impl_->g; }
std::optional<std::size_t> Reachtube::time_index() const { return impl_->time_index; }
std::size_t Reachtube::total_steps() const { return impl_->total; }
bool Reachtube::done() const { return impl_->cur.index >= impl_->total; }
const ReachsetStep& Reachtube::step() { return impl_->advance(); }

RunSummary run(const OdeSystem& sys, const RunConfig& cfg, const std::function<void(const ReachsetStep&)>& observer) {
  if (cfg.output_every == 0) throw UsageError("output interval must be positive");
  Reachtube tube(sys, cfg);
  RunSummary out;
  out.time_index = tube.time_index();
  // The default cap ignores floored dimensions: they start at a width of
  // about 1e-9 and any coupling into them multiplies the box volume.
  Index measured;
  for (std::size_t j : all_but(sys.dim(), tube.time_index())) {
    if (std::find(cfg.initial.floored.begin(), cfg.initial.floored.end(), j) == cfg.initial.floored.end()) {
      measured.push_back(j);
    }
  }
  const bool explicit_cap = cfg.blowup_threshold > 0.0;
  auto capped_volume = [&](const ReachsetStep& s) {
    if (explicit_cap) return s.vol_box;
    double v = 1.0;
    for (std::size_t j : measured) v *= s.enclosure[j].hi() - s.enclosure[j].lo();
    return v;
  };
  const double threshold = explicit_cap ? cfg.blowup_threshold : 1e6 * capped_volume(tube.current());
  out.steps.push_back(tube.current());
  if (observer) observer(tube.current());

  double volume_sum = 0.0, box_sum = 0.0;
  bool last_emitted = true;
  ReachsetStep last_good;
  while (!tube.done()) {
    const double t_fail = std::min(tube.current().t + cfg.dt, cfg.horizon);
    try {
      const ReachsetStep& s = tube.step();
      if (!std::isfinite(s.delta) || !std::isfinite(s.delta_M0) || !std::isfinite(s.vol_box) ||
          !s.enclosure.is_finite()) {
        throw StepSizeError("non-finite reachset");
      }
      if (const double v = capped_volume(s); v > threshold) {
        throw StepSizeError("volume blow-up (" + format_double(v) + " > " + format_double(threshold) + ")");
      }
    } catch (const SoundnessError&) {
      throw;
    } catch (const Error& e) {
      out.failure_time = t_fail;
      out.failure = e.what();
      spdlog::info("run failed at t={}: {}", t_fail, e.what());
      break;
    }
    const ReachsetStep& s = tube.current();
    ++out.computed_steps;
    volume_sum += reachset_volume(s);
    box_sum += s.vol_box;
    if (observer) observer(s);
    last_emitted = s.index % cfg.output_every == 0;
    if (last_emitted) {
      out.steps.push_back(s);
    } else {
      last_good = s;
    }
  }
  if (!last_emitted) out.steps.push_back(std::move(last_good));
  out.completed = !out.failure_time.has_value();
  const double count = static_cast<double>(out.computed_steps);
  out.average_volume = out.computed_steps > 0 ? box_sum / count : out.steps.front().vol_box;
  out.average_reachset_volume = out.computed_steps > 0 ? volume_sum / count : reachset_volume(out.steps.front());
  return out;
}

}  // namespace lrtng
