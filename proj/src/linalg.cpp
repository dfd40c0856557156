#include "ment/linalg.hpp"

#include <cmath>

#include "ment/errors.hpp"

namespace ment {

SymmetricEigen symmetric_eigen_desc(const MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) {
    throw ValidationError("symmetric_eigen_desc: matrix is not square");
  }
  const Index n = symmetric.rows();
  SymmetricEigen out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  // Eigen returns ascending order.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  orient_by_largest_entry(out.vectors);
  return out;
}

VectorXd orient_by_largest_entry(MatrixXd& columns) {
  VectorXd signs = VectorXd::Ones(columns.cols());
  for (Index j = 0; j < columns.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < columns.rows(); ++i) {
      const double a = std::abs(columns(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (columns.rows() > 0 && columns(best, j) < 0.0) {
      columns.col(j) *= -1.0;
      signs(j) = -1.0;
    }
  }
  return signs;
}

void orient_by_first_nonzero(MatrixXd& columns, double tol) {
  for (Index j = 0; j < columns.cols(); ++j) {
    for (Index i = 0; i < columns.rows(); ++i) {
      if (std::abs(columns(i, j)) > tol) {
        if (columns(i, j) < 0.0) columns.col(j) *= -1.0;
        break;
      }
    }
  }
}

MatrixXd procrustes_rotation(const MatrixXd& source, const MatrixXd& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw ValidationError("procrustes_rotation: shape mismatch");
  }
  const MatrixXd cross = source.transpose() * target;
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double orthonormality_defect(const MatrixXd& columns) {
  const MatrixXd gram = columns.transpose() * columns;
  return (gram - MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

MatrixXd symmetric_power(const MatrixXd& spd, double p) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(spd);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric_power: eigensolver failed");
  const VectorXd& ev = solver.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() <= 0.0) {
    throw ValidationError("symmetric_power: matrix is not positive definite");
  }
  const VectorXd powered = ev.array().pow(p).matrix();
  return solver.eigenvectors() * powered.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace ment
