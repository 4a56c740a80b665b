#include "lrtng/metric.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lrtng/errors.hpp"

namespace lrtng {
namespace {

using namespace rounding;

// Upper bound of the Frobenius norm.
double frobenius_upper(const IntervalMatrix& m) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double a = m(r, c).mag();
      s = add_up(s, mul_up(a, a));
    }
  }
  return sqrt_up(s);
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw FrameDegeneracyError(std::string(what) + " is not finite");
}

// With r >= ||I - A X||_inf < 1, A^-1 - X = X E where ||E||_inf <= r / (1 - r),
// so every entry of row i is off by at most sum_k |X_ik| * r / (1 - r).
IntervalMatrix inflate_rows(const Matrix& X, double r) {
  if (!(r < 1.0)) throw FrameDegeneracyError("inverse cannot be certified (residual norm >= 1)");
  const double q = div_up(r, sub_down(1.0, r));
  IntervalMatrix out = IntervalMatrix::point(X);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < X.cols(); ++k) row = add_up(row, std::fabs(X(i, k)));
    const double slack = mul_up(row, q);
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = ball(X(i, k), slack);
    }
  }
  return out;
}

}  // namespace

IntervalMatrix verified_inverse(const Matrix& A, const Matrix& X) {
  require_finite(A, "frame");
  require_finite(X, "approximate inverse");
  const std::size_t n = static_cast<std::size_t>(A.rows());
  const IntervalMatrix residual = IntervalMatrix::identity(n) - product_enclosure(A, X);
  return inflate_rows(X, residual.norm_inf_upper());
}

IntervalMatrix verified_inverse(const IntervalMatrix& A, const Matrix& X) {
  require_finite(X, "approximate inverse");
  if (!A.is_finite()) throw FrameDegeneracyError("frame is not finite");
  const std::size_t n = A.rows();
  const IntervalMatrix residual = IntervalMatrix::identity(n) - A * X;
  return inflate_rows(X, residual.norm_inf_upper());
}

IntervalMatrix verified_inverse(const Matrix& A) {
  require_finite(A, "frame");
  return verified_inverse(A, A.fullPivLu().inverse());
}

CoordFrame CoordFrame::from(const Matrix& A) { return from(A, A.fullPivLu().inverse()); }

CoordFrame CoordFrame::from(const Matrix& A, const Matrix& inverse_guess) {
  require_finite(A, "frame");
  if (A.rows() != A.cols() || A.rows() == 0) throw UsageError("frame must be square and non-empty");
  Eigen::JacobiSVD<Matrix> svd(A);
  if (!(svd.singularValues().minCoeff() > 1e-30)) throw FrameDegeneracyError("frame is singular");
  return CoordFrame{A, verified_inverse(A, inverse_guess)};
}

CoordFrame CoordFrame::diagonal(const Vector& radii) {
  Matrix A = Matrix::Zero(radii.size(), radii.size());
  Matrix X = Matrix::Zero(radii.size(), radii.size());
  for (Eigen::Index j = 0; j < radii.size(); ++j) {
    if (!(radii[j] > 0.0) || !std::isfinite(radii[j])) throw UsageError("radii must be positive and finite");
    A(j, j) = 1.0 / radii[j];
    X(j, j) = radii[j];
  }
  return from(A, X);
}

CoordFrame optimal_frame(const CoordFrame& A0, const Matrix& F_mid, double max_condition) {
  require_finite(F_mid, "midpoint gradient");
  Eigen::JacobiSVD<Matrix> svd(F_mid);
  const auto& s = svd.singularValues();
  const double smin = s.minCoeff();
  if (!(smin > 0.0) || s.maxCoeff() / smin > max_condition) {
    throw FrameDegeneracyError("midpoint gradient is singular or too ill-conditioned (condition " +
                               std::to_string(smin > 0 ? s.maxCoeff() / smin : INFINITY) + ")");
  }
  // A = A0 F^-1, i.e. F^T A^T = A0^T.
  const Matrix A = F_mid.transpose().fullPivLu().solve(A0.A.transpose()).transpose();
  // A^-1 = F A0^-1; use the midpoint of A0's inverse enclosure as the guess.
  const Matrix guess = F_mid * A0.A_inv.mid();
  return CoordFrame::from(A, guess);
}

IntervalMatrix gram(const IntervalMatrix& S) {
  const std::size_t n = S.cols();
  IntervalMatrix H(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j; k < n; ++k) {
      Interval acc(0.0);
      for (std::size_t i = 0; i < S.rows(); ++i) acc += j == k ? sqr(S(i, j)) : S(i, j) * S(i, k);
      H(j, k) = acc;
      H(k, j) = acc;
    }
  }
  return H;
}

double lambda_max_bound(const IntervalMatrix& H) {
  const std::size_t n = H.rows();
  if (H.cols() != n) throw UsageError("lambda_max_bound needs a square matrix");
  if (!H.is_finite()) throw FrameDegeneracyError("non-finite matrix in eigenvalue bound");

  // Gershgorin over the interval entries.
  double gersh = -INFINITY;
  for (std::size_t j = 0; j < n; ++j) {
    double row = H(j, j).hi();
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) row = add_up(row, H(j, k).mag());
    }
    gersh = std::max(gersh, row);
  }

  // Eigen-decomposition of the midpoint, certified by its residual.
  const Matrix mid = H.mid();
  const Matrix sym = 0.5 * (mid + mid.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) return gersh;
  const Matrix& V = eig.eigenvectors();
  const Vector& d = eig.eigenvalues();
  const double dmax = d.maxCoeff();

  const IntervalMatrix W = product_enclosure(V.transpose(), V) - IntervalMatrix::identity(n);
  const double w = frobenius_upper(W);
  if (!(w < 1.0)) return gersh;
  // x^T V D V^T x <= dmax ||V^T x||^2 and ||V^T x||^2 <= (1 + w) ||x||^2 (or >= 1 - w when dmax < 0).
  const double decomposed = dmax >= 0.0 ? mul_up(dmax, add_up(1.0, w)) : mul_up(dmax, sub_down(1.0, w));
  Matrix Dm = d.asDiagonal();
  const IntervalMatrix VDVt = (IntervalMatrix::point(V) * IntervalMatrix::point(Dm)) * IntervalMatrix::point(V.transpose());
  const double residual = frobenius_upper(IntervalMatrix::point(mid) - VDVt);

  // Members differ from mid by at most rad entrywise; rho(rad) <= max row sum.
  const Matrix rad = H.rad();
  double rho = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < n; ++k) row = add_up(row, rad(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
    rho = std::max(rho, row);
  }
  const double eigen_bound = add_up(add_up(decomposed, residual), rho);
  return std::min(gersh, eigen_bound);
}

double sigma_max_bound(const IntervalMatrix& S) {
  if (!S.is_finite()) throw FrameDegeneracyError("non-finite matrix in stretching factor");
  const double lmax = lambda_max_bound(gram(S));
  return sqrt_up(std::max(lmax, 0.0));
}

double stretching_factor(const CoordFrame& target, const IntervalMatrix& F, const IntervalMatrix& A0_inv) {
  return sigma_max_bound((target.A * F) * A0_inv);
}

double stretching_factor(const CoordFrame& target, const Matrix& Q, const IntervalMatrix& R,
                         const IntervalMatrix& A0_inv) {
  return sigma_max_bound((product_enclosure(target.A, Q) * R) * A0_inv);
}

double stretching_factor(const CoordFrame& target, const GradientEnclosure& g, const IntervalMatrix& A0_inv) {
  return std::min(stretching_factor(target, g.total, A0_inv), stretching_factor(target, g.Q, g.R, A0_inv));
}

double unit_ball_volume(std::size_t n) {
  const double h = static_cast<double>(n) / 2.0;
  return std::exp(h * std::log(std::numbers::pi) - std::lgamma(h + 1.0));
}

double ellipsoid_volume(const CoordFrame& frame, double delta, std::optional<std::size_t> exclude) {
  if (!(delta >= 0.0)) throw UsageError("ellipsoid radius must be non-negative");
  const Eigen::Index n = frame.A.rows();
  double log_det_m = 0.0;  // log det(M) where M = A^T A (or its slice)
  std::size_t m = static_cast<std::size_t>(n);
  if (exclude && *exclude < static_cast<std::size_t>(n)) {
    Matrix As(n, n - 1);
    for (Eigen::Index c = 0, k = 0; c < n; ++c) {
      if (static_cast<std::size_t>(c) == *exclude) continue;
      As.col(k++) = frame.A.col(c);
    }
    const Matrix M = As.transpose() * As;
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) throw FrameDegeneracyError("metric is not positive definite");
    const Matrix& L = llt.matrixL();
    for (Eigen::Index j = 0; j < L.rows(); ++j) log_det_m += 2.0 * std::log(L(j, j));
    m -= 1;
  } else {
    Eigen::PartialPivLU<Matrix> lu(frame.A);
    const Matrix& LU = lu.matrixLU();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = std::fabs(LU(j, j));
      if (!(u > 0.0)) throw FrameDegeneracyError("metric is not positive definite");
      log_det_m += 2.0 * std::log(u);
    }
  }
  if (m == 0) return 1.0;
  if (delta == 0.0) return 0.0;
  return std::exp(std::log(unit_ball_volume(m)) + static_cast<double>(m) * std::log(delta) - 0.5 * log_det_m);
}

}  // namespace lrtng
