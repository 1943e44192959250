#ifndef FORLION_LINALG_HPP
#define FORLION_LINALG_HPP

#include "forlion/types.hpp"

#include <cmath>
#include <limits>

namespace forlion {

/// Log determinant of a symmetric matrix via Cholesky, -inf when the
/// matrix is not numerically positive definite. A pivot counts as zero
/// below n * eps * max diagonal (relative, LAPACK-style): an exactly
/// rank-deficient information matrix produces roundoff-noise pivots
/// around eps * ||M||, far above any fixed absolute cutoff, and a
/// design whose support does not span the model must be reported as
/// singular rather than scored by that noise. Determinants are kept in
/// log space throughout the library; callers exponentiate only for
/// reporting.
inline double log_det(const Matrix& M) {
  const Eigen::Index n = M.rows();
  double max_diag = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) max_diag = std::max(max_diag, std::abs(M(j, j)));
  const double tol = std::max(
      1e-300, static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag);
  Matrix L = M;
  double ld = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = L(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > tol)) return -std::numeric_limits<double>::infinity();
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    ld += std::log(ljj);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = L(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
  }
  return 2.0 * ld;
}

} // namespace forlion

#endif
