#pragma once

#include <Eigen/Dense>

namespace ment {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Eigenpairs of a symmetric matrix, eigenvalues in nonincreasing order.
struct SymmetricEigen {
  VectorXd values;
  MatrixXd vectors;  // column j pairs with values(j)
};

/// Symmetric eigendecomposition sorted by decreasing eigenvalue. Each
/// eigenvector is oriented so its largest-magnitude entry is positive.
SymmetricEigen symmetric_eigen_desc(const MatrixXd& symmetric);

/// Flip columns so that the entry of largest magnitude is positive; ties go
/// to the lowest row index. Returns the per-column sign that was applied.
VectorXd orient_by_largest_entry(MatrixXd& columns);

/// Flip columns so that the first entry with |x| > tol is positive.
void orient_by_first_nonzero(MatrixXd& columns, double tol = 0.0);

/// Orthogonal W minimizing ||source * W - target||_F (orthogonal Procrustes).
MatrixXd procrustes_rotation(const MatrixXd& source, const MatrixXd& target);

/// max_ij |M^T M - I|.
double orthonormality_defect(const MatrixXd& columns);

double spectral_norm(const MatrixXd& m);

/// (S)^{p} for symmetric positive definite S via its eigendecomposition.
MatrixXd symmetric_power(const MatrixXd& spd, double p);

}  // namespace ment
