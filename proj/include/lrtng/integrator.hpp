#pragma once

#include <cstddef>
#include <memory>

#include "lrtng/interval_matrix.hpp"
#include "lrtng/model.hpp"

namespace lrtng {

/// Validated enclosure of one time step.
struct StepEnclosure {
  /// Encloses the flow after h from every point of the start box.
  Box y_next;
  /// Encloses every trajectory from the start box over [0, h].
  Box apriori;
  double accepted_h = 0.0;
};

/// Interval deformation gradient kept as Q * R to limit wrapping.
struct GradientEnclosure {
  Matrix Q;
  IntervalMatrix R;
  /// Encloses Q * R.
  IntervalMatrix total;
  Matrix mid_total;
  /// Gradient of the last step alone, over the whole start box.
  IntervalMatrix one_step;
  Matrix mid_one_step;

  static GradientEnclosure identity(std::size_t n);
};

/// Picard parameters for the a priori enclosure.
struct PicardPolicy {
  double initial_inflation = 1.1;
  double absolute_inflation = 1e-15;
  double growth = 1.5;
  int max_iterations = 20;
  int refinements = 2;
};

/// Validated Runge-Kutta stepper of order 1 (Euler), 2 (midpoint) or 4
/// (classic). The step map and all derivatives it needs are derived
/// symbolically once, at construction, and compiled to tapes.
///
/// For start box X and a priori box Y the flow after h lies in
///   Phi(X, h) + h^(p+1)/(p+1)! * (L^(p+1) id (Y) - d^(p+1)/dh^(p+1) Phi(X, [0, h]))
/// where L is the Lie derivative along f. The gradient uses the
/// x-derivative of the same identity.
class Integrator {
 public:
  Integrator(const OdeSystem& sys, int order, PicardPolicy policy = {});
  ~Integrator();
  Integrator(Integrator&&) noexcept;
  Integrator& operator=(Integrator&&) noexcept;

  const OdeSystem& system() const;
  int order() const;

  Box apriori_enclosure(const Box& x, double h) const;
  StepEnclosure validated_step(const Box& x, double h) const;
  /// Gradient over X for one step, composed with g.
  GradientEnclosure step_gradient(const Box& X, const GradientEnclosure& g, double h) const;
  /// One-step gradient enclosure only: { d/dx flow_h(p) : p in X }.
  IntervalMatrix one_step_gradient(const Box& X, double h) const;

  /// Real RK step of this order (no enclosure).
  Vector rk_step(const Vector& x, double h) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Box apriori_enclosure(const OdeSystem& sys, const Box& x, double h);
StepEnclosure validated_step(const OdeSystem& sys, const Box& x, double h, int order);
GradientEnclosure step_gradient(const OdeSystem& sys, const Box& X, const GradientEnclosure& g, double h, int order);

/// Rejects anything but 1, 2, 4.
void check_order(int order);

/// Composes an interval one-step gradient with a factored total: QR of
/// mid(C) * Q, enclosed inverse of the new Q, and the new R.
GradientEnclosure compose_gradient(const GradientEnclosure& g, const IntervalMatrix& one_step);

/// Interval enclosure of the inverse of a numerically orthogonal Q.
IntervalMatrix orthogonal_inverse(const Matrix& Q);

namespace reference {

/// Plain (non-rigorous) RK4 trajectory with fixed step h_fine; a test oracle.
Vector integrate(const OdeSystem& sys, const Vector& x, double t_end, double h_fine);

}  // namespace reference

inline Vector reference_integrate(const OdeSystem& sys, const Vector& x, double t_end, double h_fine) {
  return reference::integrate(sys, x, t_end, h_fine);
}

}  // namespace lrtng
