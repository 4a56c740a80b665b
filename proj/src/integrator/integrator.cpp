#include "lrtng/integrator.hpp"

#include <spdlog/spdlog.h>

#include <mutex>
#include <string>

#include "lrtng/errors.hpp"

namespace lrtng {

void check_order(int order) {
  if (order != 1 && order != 2 && order != 4) {
    throw UsageError("integration order must be 1, 2 or 4 (got " + std::to_string(order) + ")");
  }
}

GradientEnclosure GradientEnclosure::identity(std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  GradientEnclosure g;
  g.Q = Matrix::Identity(N, N);
  g.R = IntervalMatrix::identity(n);
  g.total = IntervalMatrix::identity(n);
  g.mid_total = Matrix::Identity(N, N);
  g.one_step = IntervalMatrix::identity(n);
  g.mid_one_step = Matrix::Identity(N, N);
  return g;
}

namespace {

std::vector<Expr> rk_map(const std::vector<Expr>& f, int order) {
  const std::size_t n = f.size();
  const Expr h = Expr::variable(n);
  std::vector<Expr> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = Expr::variable(j);

  auto eval_at = [&](const std::vector<Expr>& k, const Expr& scale) {
    std::vector<Expr> shifted(n);
    for (std::size_t j = 0; j < n; ++j) shifted[j] = x[j] + scale * k[j];
    std::vector<Expr> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = substitute(f[j], shifted);
    return out;
  };

  std::vector<Expr> phi(n);
  const std::vector<Expr>& k1 = f;
  if (order == 1) {
    for (std::size_t j = 0; j < n; ++j) phi[j] = x[j] + h * k1[j];
  } else if (order == 2) {
    const auto k2 = eval_at(k1, h / Expr::constant(2));
    for (std::size_t j = 0; j < n; ++j) phi[j] = x[j] + h * k2[j];
  } else {
    const Expr half = h / Expr::constant(2);
    const auto k2 = eval_at(k1, half);
    const auto k3 = eval_at(k2, half);
    const auto k4 = eval_at(k3, h);
    for (std::size_t j = 0; j < n; ++j) {
      phi[j] = x[j] + h / Expr::constant(6) *
                          (k1[j] + Expr::constant(2) * k2[j] + Expr::constant(2) * k3[j] + k4[j]);
    }
  }
  return phi;
}

std::vector<Expr> jacobian_of(const std::vector<Expr>& g, std::size_t n, Differentiator& d) {
  std::vector<Expr> out;
  out.reserve(g.size() * n);
  for (const auto& e : g) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(d(e, k));
  }
  return out;
}

IntervalMatrix to_matrix(const Box& v, std::size_t n) {
  IntervalMatrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) m(r, c) = v[r * n + c];
  }
  return m;
}

Interval factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;  // exact for the small k used here
  return Interval(f);
}

// mid +- factor * rad, widened by `absolute`.
Box inflate_about_mid(const Box& b, double factor, double absolute) {
  Box out(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double m = b[j].mid();
    const double r = rounding::add_up(rounding::mul_up(b[j].rad(), factor), absolute);
    out[j] = hull(b[j], ball(m, r));
  }
  return out;
}

void require_finite(const Box& b, const char* what) {
  if (!b.is_finite()) throw StepSizeError(std::string(what) + " is not finite; reduce dt");
}

}  // namespace

struct Integrator::Impl {
  OdeSystem sys;
  int order;
  PicardPolicy policy;
  std::size_t n;

  Tape phi;       // Phi(x, h)
  Tape phi_rem;   // d^(p+1)/dh^(p+1) Phi(x, h)
  Tape lie;       // L^(p+1) id (x)
  std::vector<Expr> phi_exprs;
  std::vector<Expr> phi_rem_exprs;
  std::vector<Expr> lie_exprs;

  std::once_flag grad_once;
  Tape jac;        // J(x), n*n
  Tape dphi;       // d/dx Phi(x, h), n*n
  Tape dphi_rem;   // d/dx d^(p+1)/dh^(p+1) Phi, n*n
  Tape dlie;       // d/dx L^(p+1) id, n*n

  Impl(const OdeSystem& s, int p, PicardPolicy pol) : sys(s), order(p), policy(pol), n(s.dim()) {
    check_order(p);
    Differentiator d;
    phi_exprs = rk_map(sys.rhs(), p);
    phi_rem_exprs = phi_exprs;
    for (int k = 0; k <= p; ++k) {
      for (auto& e : phi_rem_exprs) e = d(e, n);
    }
    lie_exprs = sys.rhs();
    for (int k = 1; k <= p; ++k) {
      for (auto& e : lie_exprs) e = lie_derivative(e, sys.rhs(), d);
    }
    phi = Tape(phi_exprs, n + 1);
    phi_rem = Tape(phi_rem_exprs, n + 1);
    lie = Tape(lie_exprs, n);
  }

  void build_gradient_tapes() {
    std::call_once(grad_once, [this] {
      Differentiator d;
      std::vector<Expr> j;
      for (const auto& row : sys.jacobian()) j.insert(j.end(), row.begin(), row.end());
      jac = Tape(j, n);
      dphi = Tape(jacobian_of(phi_exprs, n, d), n + 1);
      dphi_rem = Tape(jacobian_of(phi_rem_exprs, n, d), n + 1);
      dlie = Tape(jacobian_of(lie_exprs, n, d), n);
    });
  }

  Interval remainder_scale(double h) const { return pow(Interval(h), order + 1) / factorial(order + 1); }

  static Box with_h(const Box& x, const Interval& h) {
    std::vector<Interval> v(x.begin(), x.end());
    v.push_back(h);
    return Box(std::move(v));
  }

  Box apriori(const Box& x, double h) const {
    if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("step size must be positive and finite");
    if (x.size() != n) throw UsageError("start box has the wrong dimension");
    const Interval span(0.0, h);
    const Tape& f = sys.rhs_tape();
    Box y = inflate_about_mid(x, policy.initial_inflation, policy.absolute_inflation);
    std::size_t bad = 0;
    for (int it = 0; it < policy.max_iterations; ++it) {
      const Box fy = f.eval(y);
      Box next = x + span * fy;
      if (!next.is_finite()) {
        std::size_t j = 0;
        while (j < n && next[j].is_finite()) ++j;
        throw StepSizeError("a priori enclosure of x" + std::to_string(j + 1) + " diverged; reduce dt");
      }
      std::vector<std::size_t> escaping;
      for (std::size_t j = 0; j < n; ++j) {
        if (!next[j].subset_of(y[j])) escaping.push_back(j);
      }
      if (escaping.empty()) {
        // next is itself a valid enclosure and shrinks under further sweeps.
        for (int r = 0; r < policy.refinements; ++r) {
          Box again = x + span * f.eval(next);
          auto tighter = intersect(again, next);
          if (!tighter) break;
          next = *tighter;
        }
        return next;
      }
      bad = escaping.front();
      spdlog::trace("picard {}: x{} next [{}, {}] not in [{}, {}]", it, bad + 1, next[bad].lo(), next[bad].hi(),
                    y[bad].lo(), y[bad].hi());
      // Only escaping components grow; inflating settled ones feeds the chase.
      Box grown = hull(y, next);
      for (std::size_t j : escaping) {
        grown[j] = hull(grown[j], ball(grown[j].mid(), rounding::add_up(rounding::mul_up(grown[j].rad(), policy.growth),
                                                                        policy.absolute_inflation)));
      }
      y = std::move(grown);
    }
    throw StepSizeError("a priori enclosure not verified after " + std::to_string(policy.max_iterations) +
                        " iterations: component x" + std::to_string(bad + 1) + " escapes; reduce dt");
  }

  StepEnclosure step(const Box& x, double h) const {
    StepEnclosure out;
    out.apriori = apriori(x, h);
    out.accepted_h = h;
    const Box phi_x = phi.eval(with_h(x, Interval(h)));
    const Box rem_rk = phi_rem.eval(with_h(x, Interval(0.0, h)));
    const Box rem_flow = lie.eval(out.apriori);
    const Box y = phi_x + remainder_scale(h) * (rem_flow - rem_rk);
    require_finite(y, "truncation bound");
    auto clipped = intersect(y, out.apriori);
    if (!clipped) throw SoundnessError("step enclosure disjoint from its a priori enclosure");
    out.y_next = *clipped;
    return out;
  }

  IntervalMatrix one_step(const Box& X, double h) {
    build_gradient_tapes();
    const Box Y = apriori(X, h);
    const IntervalMatrix J = to_matrix(jac.eval(Y), n);

    // |F(s) - I| <= exp(s*L) - 1 entrywise, L the infinity norm of J over Y.
    const double L = J.norm_inf_upper();
    const double growth = (exp(Interval(rounding::mul_up(L, h))) - Interval(1.0)).hi();
    if (!std::isfinite(growth)) throw StepSizeError("gradient a priori bound is not finite; reduce dt");
    IntervalMatrix F_ap = inflate(IntervalMatrix::identity(n), growth);
    // One Picard sweep of F' = J F tightens the crude bound.
    const IntervalMatrix refined = IntervalMatrix::identity(n) + Interval(0.0, h) * (J * F_ap);
    if (auto both = intersect(refined, F_ap)) F_ap = *both;

    const IntervalMatrix D_phi = to_matrix(dphi.eval(with_h(X, Interval(h))), n);
    const IntervalMatrix D_rem = to_matrix(dphi_rem.eval(with_h(X, Interval(0.0, h))), n);
    const IntervalMatrix D_lie = to_matrix(dlie.eval(Y), n);

    IntervalMatrix C = D_phi + remainder_scale(h) * (D_lie * F_ap - D_rem);
    if (!C.is_finite()) throw StepSizeError("gradient truncation bound is not finite; reduce dt");
    return C;
  }
};

Integrator::Integrator(const OdeSystem& sys, int order, PicardPolicy policy)
    : impl_(std::make_unique<Impl>(sys, order, policy)) {}
Integrator::~Integrator() = default;
Integrator::Integrator(Integrator&&) noexcept = default;
Integrator& Integrator::operator=(Integrator&&) noexcept = default;

const OdeSystem& Integrator::system() const { return impl_->sys; }
int Integrator::order() const { return impl_->order; }

Box Integrator::apriori_enclosure(const Box& x, double h) const { return impl_->apriori(x, h); }

StepEnclosure Integrator::validated_step(const Box& x, double h) const { return impl_->step(x, h); }

IntervalMatrix Integrator::one_step_gradient(const Box& X, double h) const { return impl_->one_step(X, h); }

GradientEnclosure Integrator::step_gradient(const Box& X, const GradientEnclosure& g, double h) const {
  return compose_gradient(g, impl_->one_step(X, h));
}

Vector Integrator::rk_step(const Vector& x, double h) const {
  Vector in(x.size() + 1);
  in.head(x.size()) = x;
  in[x.size()] = h;
  return impl_->phi.eval(in);
}

IntervalMatrix orthogonal_inverse(const Matrix& Q) {
  const std::size_t n = static_cast<std::size_t>(Q.rows());
  const Matrix Qt = Q.transpose();
  const IntervalMatrix E = product_enclosure(Qt, Q) - IntervalMatrix::identity(n);
  const double e = E.norm_inf_upper();
  if (!(e < 0.5)) throw FrameDegeneracyError("orthogonal factor lost orthogonality");
  const double qt_norm = IntervalMatrix::point(Qt).norm_inf_upper();
  // (I + E)^-1 - I has norm <= e / (1 - e).
  const double slack = rounding::mul_up(rounding::div_up(e, rounding::sub_down(1.0, e)), qt_norm);
  return inflate(IntervalMatrix::point(Qt), slack);
}

GradientEnclosure compose_gradient(const GradientEnclosure& g, const IntervalMatrix& C) {
  const std::size_t n = C.rows();
  GradientEnclosure out;
  out.one_step = C;
  out.mid_one_step = C.mid();
  const Matrix B = out.mid_one_step * g.Q;
  Eigen::HouseholderQR<Matrix> qr(B);
  out.Q = qr.householderQ() * Matrix::Identity(B.rows(), B.cols());
  const IntervalMatrix Qinv = orthogonal_inverse(out.Q);
  out.R = (Qinv * (C * g.Q)) * g.R;
  out.total = out.Q * out.R;
  if (!out.total.is_finite() || !out.R.is_finite()) throw StepSizeError("gradient enclosure is not finite");
  out.mid_total = out.Q * out.R.mid();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto R = static_cast<Eigen::Index>(r), K = static_cast<Eigen::Index>(c);
      out.mid_total(R, K) = std::clamp(out.mid_total(R, K), out.total(r, c).lo(), out.total(r, c).hi());
    }
  }
  return out;
}

Box apriori_enclosure(const OdeSystem& sys, const Box& x, double h) {
  return Integrator(sys, 1).apriori_enclosure(x, h);
}

StepEnclosure validated_step(const OdeSystem& sys, const Box& x, double h, int order) {
  return Integrator(sys, order).validated_step(x, h);
}

GradientEnclosure step_gradient(const OdeSystem& sys, const Box& X, const GradientEnclosure& g, double h, int order) {
  return Integrator(sys, order).step_gradient(X, g, h);
}

namespace reference {

Vector integrate(const OdeSystem& sys, const Vector& x0, double t_end, double h_fine) {
  if (!(h_fine > 0.0)) throw UsageError("reference step must be positive");
  const Tape& f = sys.rhs_tape();
  Vector x = x0;
  double t = 0.0;
  while (t < t_end) {
    const double h = std::min(h_fine, t_end - t);
    const Vector k1 = f.eval(x);
    const Vector k2 = f.eval(Vector(x + 0.5 * h * k1));
    const Vector k3 = f.eval(Vector(x + 0.5 * h * k2));
    const Vector k4 = f.eval(Vector(x + h * k3));
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (!x.allFinite()) throw DomainError("reference trajectory became non-finite");
    if (t_end - t < 1e-12 * std::max(1.0, t_end)) break;
  }
  return x;
}

}  // namespace reference

}  // namespace lrtng
