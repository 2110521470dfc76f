#pragma once

#include <Eigen/Dense>

namespace irltrack {

/// Eigenvalues (ascending) of a small dense symmetric matrix by cyclic Jacobi
/// rotations, iterated until the off-diagonal Frobenius norm is <= 1e-10.
/// Throws DomainError when A is not square or not symmetric to 1e-9
/// (relative to max(1, max|A_ij|)).
Eigen::VectorXd symmetric_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Smallest eigenvalue of a symmetric matrix; see symmetric_eigenvalues.
double min_eig_sym(const Eigen::Ref<const Eigen::MatrixXd>& a);

}  // namespace irltrack
