#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/series.hpp"

namespace ment {

/// Column concatenation [A(1) | ... | A(T)], n x nT.
struct UnfoldedMatrix {
  Eigen::MatrixXd data;
  Eigen::Index n = 0;
  Eigen::Index T = 0;

  /// Block t (0-based) as a view.
  auto block(Eigen::Index t) const { return data.middleCols(t * n, n); }
};

UnfoldedMatrix unfold(const SnapshotSeries& series);

/// Rank-d truncated SVD A ~ U diag(sigma) V^T with V split into T blocks.
struct TruncatedSVD {
  Eigen::MatrixXd U;                    // n x d
  Eigen::VectorXd sigma;                // d, nonincreasing
  std::vector<Eigen::MatrixXd> V;       // T blocks of n x d
  /// Leading singular values beyond d (up to 2d) for scree reports.
  Eigen::VectorXd trailing_sigma;
  double max_residual = 0.0;            // max_j ||A v_j - sigma_j u_j||
  bool repeated_singular_values = false;
  std::vector<std::string> warnings;

  Eigen::Index d() const { return sigma.size(); }
  Eigen::Index n() const { return U.rows(); }
  Eigen::Index T() const { return static_cast<Eigen::Index>(V.size()); }
};

/// Gram route: eigendecompose A A^T, then V(t) = A(t)^T U diag(sigma)^{-1}.
/// Each u_j has its largest-magnitude entry positive; zero singular values get
/// zero right factors, and an all-zero matrix gets U = leading canonical basis.
TruncatedSVD truncated_svd(const UnfoldedMatrix& A, Eigen::Index d);
TruncatedSVD truncated_svd(const SnapshotSeries& series, Eigen::Index d);

/// Dense bidiagonalization SVD of the unfolded matrix with the same sign
/// convention; the reference used to validate the Gram route.
TruncatedSVD truncated_svd_dense(const UnfoldedMatrix& A, Eigen::Index d);

/// Y_mod(t) = n^{-1/2} V(t) diag(sigma).
EmbeddingSeries modified_uase(const TruncatedSVD& svd, Eigen::Index n);
/// Y_orig(t) = V(t) diag(sigma)^{1/2}.
EmbeddingSeries original_uase(const TruncatedSVD& svd);

/// Convenience: SVD plus the requested flavor.
EmbeddingSeries embed(const SnapshotSeries& series, Eigen::Index d, EmbeddingFlavor flavor);

}  // namespace ment
