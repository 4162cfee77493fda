#pragma once

#include <Eigen/Core>

namespace gsr {

// Thin SVD: input = U * diag(sigma) * V^T with r = min(rows, cols).
struct SvdFactors {
  Eigen::MatrixXd U;     // rows x r, orthonormal columns
  Eigen::VectorXd sigma; // r values, nonincreasing, >= 0
  Eigen::MatrixXd V;     // cols x r, orthonormal columns
};

// One-sided Jacobi SVD for the small dense matrices that patch groups
// produce. Deterministic: the first entry of each U column whose magnitude
// exceeds 1e-10 is made nonnegative. Throws DomainError on non-finite input.
SvdFactors svd_small(Eigen::MatrixXd const &m);

} // namespace gsr
