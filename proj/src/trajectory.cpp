#include "ment/trajectory.hpp"

#include <cmath>
#include <limits>

#include "ment/errors.hpp"
#include "ment/linalg.hpp"

namespace ment {

MatrixXd double_center_squared(const MatrixXd& squared) {
  if (squared.rows() != squared.cols()) throw ValidationError("double_center: matrix is not square");
  const Index T = squared.rows();
  if (T == 0) return squared;
  // -1/2 J D J expanded: subtract row and column means, add the grand mean.
  const VectorXd row_mean = squared.rowwise().mean();
  const VectorXd col_mean = squared.colwise().mean().transpose();
  const double grand = squared.mean();
  MatrixXd e(T, T);
  for (Index i = 0; i < T; ++i)
    for (Index j = 0; j < T; ++j) e(i, j) = -0.5 * (squared(i, j) - row_mean(i) - col_mean(j) + grand);
  return 0.5 * (e + e.transpose());
}

MatrixXd double_center(const DistanceMatrix& D) { return double_center_squared(D.D2); }

std::vector<double> Trajectory::first_coordinate() const {
  std::vector<double> out(static_cast<std::size_t>(coords.rows()));
  for (Index t = 0; t < coords.rows(); ++t) out[t] = coords(t, 0);
  return out;
}

Trajectory cmds(const MatrixXd& gram, Index c, Metric metric) {
  if (c < 1) throw ValidationError("cmds: target dimension must be >= 1");
  if (gram.rows() != gram.cols()) throw ValidationError("cmds: Gram matrix is not square");
  const Index T = gram.rows();
  const SymmetricEigen eig = symmetric_eigen_desc(0.5 * (gram + gram.transpose()));

  Trajectory out;
  out.metric = metric;
  out.spectrum = eig.values;
  out.coords = MatrixXd::Zero(T, c);
  out.eigenvalues = VectorXd::Zero(c);

  const double scale = T > 0 ? eig.values.cwiseAbs().maxCoeff() : 0.0;
  const double positive_tol = 1e-13 * scale;
  for (Index i = 0; i < std::min(c, T); ++i) {
    const double lambda = eig.values(i);
    if (lambda <= positive_tol || lambda <= 0.0) break;
    out.coords.col(i) = eig.vectors.col(i) * std::sqrt(lambda);
    out.eigenvalues(i) = lambda;
    ++out.positive_count;
  }
  out.insufficient_positive = out.positive_count < c;

  double strain2 = 0.0;
  for (Index i = 0; i < T; ++i) {
    const double lambda = eig.values(i);
    if (lambda < 0.0 || i >= out.positive_count) strain2 += lambda * lambda;
    if (lambda < -1e-10 * scale) out.indefinite = true;
  }
  out.strain = std::sqrt(strain2);

  for (Index j = 0; j < c; ++j) {
    const double colmax = out.coords.col(j).cwiseAbs().maxCoeff();
    MatrixXd col = out.coords.col(j);
    orient_by_first_nonzero(col, 1e-9 * colmax);
    out.coords.col(j) = col;
  }
  return out;
}

Trajectory cmds(const DistanceMatrix& D, Index c) { return cmds(D.gram, c, D.metric); }

Index numerical_rank(const VectorXd& spectrum, double rel_tol) {
  if (spectrum.size() == 0 || spectrum(0) <= 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < spectrum.size(); ++i)
    if (spectrum(i) > rel_tol * spectrum(0)) ++r;
  return r;
}

AlignmentResult align(const MatrixXd& est, const MatrixXd& ref, AlignmentGroup group) {
  if (est.rows() != ref.rows() || est.cols() != ref.cols()) {
    throw ValidationError("align: trajectories differ in T or c");
  }
  const Index c = est.cols();
  AlignmentResult out;
  if (group == AlignmentGroup::kOrthogonal) {
    // est ~ ref W^T, so W^T solves Procrustes from ref to est.
    out.W = procrustes_rotation(ref, est).transpose();
  } else {
    out.W = MatrixXd::Identity(c, c);
    for (Index j = 0; j < c; ++j)
      if (est.col(j).dot(ref.col(j)) < 0.0) out.W(j, j) = -1.0;
  }
  out.squared_error = (est - ref * out.W.transpose()).squaredNorm();
  return out;
}

AlignmentResult align(const Trajectory& est, const Trajectory& ref, AlignmentGroup group) {
  return align(est.coords, ref.coords, group);
}

Conditioning cmds_conditioning(const VectorXd& spectrum, int a, int b) {
  int r = 0;
  while (r < spectrum.size() && spectrum(r) > 0.0) ++r;
  if (a < 1 || b < a || b > r) {
    throw ValidationError("cmds_conditioning: need 1 <= a <= b <= number of positive eigenvalues");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto lambda = [&](int i) {
    if (i <= 0) return inf;
    if (i > r) return -inf;
    return spectrum(i - 1);
  };
  Conditioning out;
  out.gap = std::min(lambda(a - 1) - lambda(a), lambda(b) - lambda(b + 1));
  out.degenerate = !(out.gap > 0.0);
  const double denom = std::min(out.gap, lambda(b));
  out.kappa = denom > 0.0 ? lambda(a) / denom : inf;
  return out;
}

}  // namespace ment
