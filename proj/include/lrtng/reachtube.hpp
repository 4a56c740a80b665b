#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lrtng/integrator.hpp"
#include "lrtng/metric.hpp"
#include "lrtng/model.hpp"

namespace lrtng {

/// One time slice of a reachtube. The frame lives on the state without the
/// time variable, if there is one.
struct ReachsetStep {
  std::size_t index = 0;
  double t = 0.0;
  Vector center;
  CoordFrame frame;
  /// Radius of the ellipsoid ||A (x - center)|| <= delta.
  double delta = 0.0;
  /// Radius of the same kind of set in the initial frame.
  double delta_M0 = 0.0;
  /// Bound on the distance between center and the true center trajectory.
  double sigma = 0.0;
  double sigma_M0 = 0.0;
  /// Per-step center errors that sigma accumulates.
  double epsilon = 0.0;
  double epsilon_M0 = 0.0;
  Box enclosure;
  double vol_ellipsoid = 0.0;
  double vol_ball = 0.0;
  double vol_box = 0.0;
};

struct RunConfig {
  double dt = 0.01;
  double horizon = 1.0;
  int order = 1;
  InitialSet initial;
  /// Defaults to the system's own time variable.
  std::optional<std::size_t> time_index;
  /// Volume cap for vol_box. 0 means 1e6 times the initial box volume, both
  /// taken over the dimensions whose radius was not floored.
  double blowup_threshold = 0.0;
  std::size_t output_every = 1;
  /// Intersect the ellipsoid hull with the initial-frame hull.
  bool intersect = true;
  PicardPolicy picard;
};

struct RunSummary {
  /// Step 0, every output_every-th step and the last computed one.
  std::vector<ReachsetStep> steps;
  std::size_t computed_steps = 0;
  /// Mean vol_box over steps 1..computed_steps.
  double average_volume = 0.0;
  /// Mean reachset_volume over the same steps.
  double average_reachset_volume = 0.0;
  std::optional<std::size_t> time_index;
  bool completed = false;
  std::optional<double> failure_time;
  std::string failure;
};

/// Volume bound of the reachset: the smaller of its ellipsoid and its ball.
inline double reachset_volume(const ReachsetStep& s) { return std::min(s.vol_ellipsoid, s.vol_ball); }

/// The step's frame as an n x n matrix; the time variable's row and column are zero.
Matrix embedded_frame(const ReachsetStep& s, std::size_t n, std::optional<std::size_t> time_index);

/// Box containing { x : ||A (x - c)||_2 <= delta }.
Box box_hull_ellipsoid(const CoordFrame& frame, const Vector& c, double delta);

/// Box containing the intersection of two ellipsoids about the same center;
/// at least as tight as the intersection of their hulls, usually tighter.
Box box_hull_intersection(const CoordFrame& a, double da, const CoordFrame& b, double db, const Vector& c);

/// Number of steps for a horizon; the last one may be partial.
std::size_t step_count(double dt, double horizon);

/// Step-by-step driver. Throws SoundnessError on an empty reachset
/// intersection; other errors propagate from the integrator and metric.
class Reachtube {
 public:
  Reachtube(const OdeSystem& sys, RunConfig cfg);
  ~Reachtube();
  Reachtube(Reachtube&&) noexcept;
  Reachtube& operator=(Reachtube&&) noexcept;

  const RunConfig& config() const;
  const ReachsetStep& current() const;
  const GradientEnclosure& gradient() const;
  std::optional<std::size_t> time_index() const;
  std::size_t total_steps() const;
  bool done() const;
  const ReachsetStep& step();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Slice 0 for an initial set.
ReachsetStep initial_step(const InitialSet& init, std::optional<std::size_t> time_index);

/// Runs to the horizon or the first failure. `observer` sees every computed
/// step, including step 0, in order.
RunSummary run(const OdeSystem& sys, const RunConfig& cfg,
               const std::function<void(const ReachsetStep&)>& observer = {});

}  // namespace lrtng
