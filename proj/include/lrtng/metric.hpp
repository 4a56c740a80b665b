#pragma once

#include <cstddef>
#include <optional>

#include "lrtng/integrator.hpp"
#include "lrtng/interval_matrix.hpp"

namespace lrtng {

/// Linear coordinates x -> A x defining the norm ||x||_M = ||A x||_2 with
/// M = A^T A. A_inv rigorously encloses A^-1.
struct CoordFrame {
  Matrix A;
  IntervalMatrix A_inv;

  /// Verifies invertibility; throws FrameDegeneracyError otherwise.
  static CoordFrame from(const Matrix& A);
  static CoordFrame from(const Matrix& A, const Matrix& inverse_guess);
  /// diag(1 / radii).
  static CoordFrame diagonal(const Vector& radii);
};

/// Enclosure of A^-1 from an approximate inverse X: row i of X widened by
/// ||X_i||_1 r / (1 - r) with r >= ||I - A X||_inf. Throws if r >= 1.
IntervalMatrix verified_inverse(const Matrix& A, const Matrix& X);
IntervalMatrix verified_inverse(const Matrix& A);
/// Same for every member of an interval matrix.
IntervalMatrix verified_inverse(const IntervalMatrix& A, const Matrix& X);

/// Frame A0 * F_mid^-1, the volume-minimizing choice for gradient F_mid.
CoordFrame optimal_frame(const CoordFrame& A0, const Matrix& F_mid, double max_condition = 1e14);

/// Upper bound on max over F in [F] of sigma_max(A_target F A0^-1).
double stretching_factor(const CoordFrame& target, const IntervalMatrix& F, const IntervalMatrix& A0_inv);
/// Same bound for F in Q * R; the product is regrouped as (A_target Q) R A0^-1.
double stretching_factor(const CoordFrame& target, const Matrix& Q, const IntervalMatrix& R,
                         const IntervalMatrix& A0_inv);
/// Tightest of the two forms above.
double stretching_factor(const CoordFrame& target, const GradientEnclosure& g, const IntervalMatrix& A0_inv);

/// Upper bound on sigma_max over an interval matrix S, via lambda_max(S^T S).
double sigma_max_bound(const IntervalMatrix& S);

/// Upper bound on lambda_max over the symmetric members of H (H must be
/// symmetric as an interval matrix). Minimum of an eigen-decomposition
/// bound on mid(H) plus the spectral radius of rad(H), and Gershgorin.
double lambda_max_bound(const IntervalMatrix& H);

/// Volume of the unit ball in R^n: pi^(n/2) / Gamma(n/2 + 1).
double unit_ball_volume(std::size_t n);

/// Volume of { x : ||A (x - c)||_2 <= delta }. With `exclude`, the slice
/// with that coordinate held fixed (M's row and column removed).
double ellipsoid_volume(const CoordFrame& frame, double delta, std::optional<std::size_t> exclude = std::nullopt);

/// Interval matrix S^T S with the diagonal via squares and the result symmetric.
IntervalMatrix gram(const IntervalMatrix& S);

}  // namespace lrtng
