#include "ment/embedding.hpp"

#include <cmath>

#include "ment/errors.hpp"
#include "ment/linalg.hpp"

namespace ment {

std::vector<std::string> default_node_ids(Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

const char* to_string(EmbeddingFlavor flavor) {
  switch (flavor) {
    case EmbeddingFlavor::kOriginal:
      return "original";
    case EmbeddingFlavor::kModified:
      return "modified";
    case EmbeddingFlavor::kLatent:
      return "latent";
  }
  return "unknown";
}

void SnapshotSeries::validate() const {
  if (adjacency.empty()) throw ValidationError("snapshot series has no snapshots");
  if (static_cast<Index>(node_ids.size()) != n) {
    throw ValidationError("snapshot series: node_ids has " + std::to_string(node_ids.size()) +
                          " entries for n = " + std::to_string(n));
  }
  for (std::size_t t = 0; t < adjacency.size(); ++t) {
    const MatrixXd& a = adjacency[t];
    if (a.rows() != n || a.cols() != n) {
      throw ValidationError("snapshot " + std::to_string(t) + " has inconsistent shape");
    }
    for (Index i = 0; i < n; ++i) {
      if (a(i, i) != 0.0) throw ValidationError("snapshot " + std::to_string(t) + " has a self-loop");
      for (Index j = 0; j < i; ++j) {
        const double v = a(i, j);
        if (v != a(j, i)) throw ValidationError("snapshot " + std::to_string(t) + " is not symmetric");
        if (v != 0.0 && v != 1.0) throw ValidationError("snapshot " + std::to_string(t) + " is not binary");
      }
    }
  }
}

void EmbeddingSeries::validate() const {
  if (blocks.empty()) throw ValidationError("embedding series is empty");
  for (const MatrixXd& b : blocks) {
    if (b.rows() != n() || b.cols() != d()) throw ValidationError("embedding blocks differ in shape");
  }
}

EmbeddingSeries EmbeddingSeries::transformed(const MatrixXd& transform) const {
  EmbeddingSeries out;
  out.flavor = flavor;
  out.blocks.reserve(blocks.size());
  for (const MatrixXd& b : blocks) out.blocks.push_back(b * transform);
  return out;
}

UnfoldedMatrix unfold(const SnapshotSeries& series) {
  if (series.adjacency.empty()) throw ValidationError("unfold: empty series");
  const Index n = series.n;
  UnfoldedMatrix out;
  out.n = n;
  out.T = series.T();
  out.data.resize(n, n * out.T);
  for (Index t = 0; t < out.T; ++t) {
    const MatrixXd& a = series.adjacency[t];
    if (a.rows() != n || a.cols() != n) throw ValidationError("unfold: inconsistent snapshot shapes");
    out.data.middleCols(t * n, n) = a;
  }
  return out;
}

namespace {

template <typename BlockFn>
TruncatedSVD gram_route_svd(Index n, Index T, Index d, BlockFn block) {
  if (d < 1 || d > n) {
    throw ValidationError("truncated_svd: rank " + std::to_string(d) + " outside [1, " + std::to_string(n) + "]");
  }
  MatrixXd gram = MatrixXd::Zero(n, n);
  for (Index t = 0; t < T; ++t) gram.selfadjointView<Eigen::Lower>().rankUpdate(block(t));
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("truncated_svd: eigensolver on the n x n Gram matrix did not converge (n = " +
                         std::to_string(n) + ")");
  }
  const VectorXd evals = solver.eigenvalues().reverse();
  TruncatedSVD out;
  out.U = solver.eigenvectors().rowwise().reverse().leftCols(d);
  out.sigma = evals.head(d).cwiseMax(0.0).cwiseSqrt();
  const Index extra = std::min<Index>(d, n - d);
  out.trailing_sigma = evals.segment(d, extra).cwiseMax(0.0).cwiseSqrt();

  const double top = out.sigma(0);
  if (top == 0.0) {
    out.U = MatrixXd::Identity(n, d);
  } else {
    orient_by_largest_entry(out.U);
  }

  const double zero_tol = 1e-12 * std::max(top, 1e-300);
  VectorXd inv = VectorXd::Zero(d);
  for (Index j = 0; j < d; ++j) inv(j) = out.sigma(j) > zero_tol ? 1.0 / out.sigma(j) : 0.0;

  out.V.reserve(static_cast<std::size_t>(T));
  MatrixXd av = MatrixXd::Zero(n, d);
  for (Index t = 0; t < T; ++t) {
    const auto a = block(t);
    out.V.push_back((a.transpose() * out.U) * inv.asDiagonal());
    av.noalias() += a * out.V.back();
  }
  for (Index j = 0; j < d; ++j) {
    out.max_residual = std::max(out.max_residual, (av.col(j) - out.sigma(j) * out.U.col(j)).norm());
  }
  for (Index j = 0; j + 1 < d; ++j) {
    if (out.sigma(j) > 0.0 && out.sigma(j) - out.sigma(j + 1) <= 1e-10 * top) {
      out.repeated_singular_values = true;
      out.warnings.push_back("singular values " + std::to_string(j + 1) + " and " + std::to_string(j + 2) +
                             " are repeated; the singular subspace is not unique");
    }
  }
  if (top > 0.0 && out.max_residual > 1e-6 * top) {
    throw NumericalError("truncated_svd: residual " + std::to_string(out.max_residual) +
                         " exceeds 1e-6 * sigma_1 after eigensolve of the Gram matrix");
  }
  return out;
}

}  // namespace

TruncatedSVD truncated_svd(const UnfoldedMatrix& A, Index d) {
  return gram_route_svd(A.n, A.T, d, [&](Index t) { return A.block(t); });
}

TruncatedSVD truncated_svd(const SnapshotSeries& series, Index d) {
  if (series.adjacency.empty()) throw ValidationError("truncated_svd: empty series");
  for (const MatrixXd& a : series.adjacency) {
    if (a.rows() != series.n || a.cols() != series.n) {
      throw ValidationError("truncated_svd: inconsistent snapshot shapes");
    }
  }
  return gram_route_svd(series.n, series.T(), d, [&](Index t) -> const MatrixXd& { return series.adjacency[t]; });
}

TruncatedSVD truncated_svd_dense(const UnfoldedMatrix& A, Index d) {
  if (d < 1 || d > A.n) throw ValidationError("truncated_svd_dense: rank outside [1, n]");
  Eigen::BDCSVD<MatrixXd> svd(A.data, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("truncated_svd_dense: SVD failed");
  TruncatedSVD out;
  out.U = svd.matrixU().leftCols(d);
  out.sigma = svd.singularValues().head(d);
  MatrixXd v = svd.matrixV().leftCols(d);
  const double top = out.sigma(0);
  if (top == 0.0) {
    out.U = MatrixXd::Identity(A.n, d);
    v.setZero();
  } else {
    const VectorXd signs = orient_by_largest_entry(out.U);
    v = v * signs.asDiagonal();
  }
  for (Index j = 0; j < d; ++j)
    if (out.sigma(j) <= 1e-12 * std::max(top, 1e-300)) v.col(j).setZero();
  const Index extra = std::min<Index>(d, svd.singularValues().size() - d);
  out.trailing_sigma = svd.singularValues().segment(d, extra);
  for (Index t = 0; t < A.T; ++t) out.V.push_back(v.middleRows(t * A.n, A.n));
  const MatrixXd av = A.data * v;
  for (Index j = 0; j < d; ++j) {
    out.max_residual = std::max(out.max_residual, (av.col(j) - out.sigma(j) * out.U.col(j)).norm());
  }
  return out;
}

EmbeddingSeries modified_uase(const TruncatedSVD& svd, Index n) {
  if (n < 1) throw ValidationError("modified_uase: n must be positive");
  if (svd.n() != n) throw ValidationError("modified_uase: node count does not match the SVD");
  EmbeddingSeries out;
  out.flavor = EmbeddingFlavor::kModified;
  const VectorXd scale = svd.sigma / std::sqrt(static_cast<double>(n));
  for (const MatrixXd& v : svd.V) {
    if (v.cols() != svd.d()) throw ValidationError("modified_uase: V block has wrong width");
    out.blocks.push_back(v * scale.asDiagonal());
  }
  return out;
}

EmbeddingSeries original_uase(const TruncatedSVD& svd) {
  EmbeddingSeries out;
  out.flavor = EmbeddingFlavor::kOriginal;
  const VectorXd scale = svd.sigma.cwiseSqrt();
  for (const MatrixXd& v : svd.V) {
    if (v.cols() != svd.d()) throw ValidationError("original_uase: V block has wrong width");
    out.blocks.push_back(v * scale.asDiagonal());
  }
  return out;
}

EmbeddingSeries embed(const SnapshotSeries& series, Index d, EmbeddingFlavor flavor) {
  const TruncatedSVD svd = truncated_svd(series, d);
  if (flavor == EmbeddingFlavor::kOriginal) return original_uase(svd);
  return modified_uase(svd, series.n);
}

}  // namespace ment
