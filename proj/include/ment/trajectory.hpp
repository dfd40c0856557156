#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/geometry.hpp"

namespace ment {

/// -1/2 J D2 J with J = I - 11^T/T, from squared distances.
Eigen::MatrixXd double_center_squared(const Eigen::MatrixXd& squared);
/// Centered Gram of a distance matrix (recomputed from its squared form).
Eigen::MatrixXd double_center(const DistanceMatrix& D);

/// CMDS coordinates of the time points.
struct Trajectory {
  Eigen::MatrixXd coords;           // T x c, row t is psi(t)
  Metric metric;
  Eigen::VectorXd eigenvalues;      // the c retained eigenvalues (0 where unavailable)
  Eigen::VectorXd spectrum;         // full Gram spectrum, nonincreasing
  double strain = 0.0;
  int positive_count = 0;           // eigenvalues used (<= c)
  bool insufficient_positive = false;
  bool indefinite = false;          // Gram has a negative eigenvalue beyond rounding

  Eigen::Index T() const { return coords.rows(); }
  Eigen::Index c() const { return coords.cols(); }
  /// Column 0 as a plain vector (the 1D trajectory).
  std::vector<double> first_coordinate() const;
};

/// Top-c positive eigenpairs of a symmetric centered Gram, Z = U_c L_c^{1/2}.
/// Columns are oriented so their first non-negligible entry is positive.
Trajectory cmds(const Eigen::MatrixXd& gram, Eigen::Index c, Metric metric = Metric::tv());
Trajectory cmds(const DistanceMatrix& D, Eigen::Index c);

/// Number of eigenvalues with lambda_i > rel_tol * lambda_1.
Eigen::Index numerical_rank(const Eigen::VectorXd& spectrum, double rel_tol = 1e-10);

enum class AlignmentGroup { kOrthogonal, kSign };

struct AlignmentResult {
  Eigen::MatrixXd W;  // c x c, est(t) ~ W ref(t)
  double squared_error = 0.0;
};

/// Optimal W in O(c) (or diagonal sign flips) minimizing
/// sum_t ||est(t) - W ref(t)||^2.
AlignmentResult align(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref, AlignmentGroup group);
AlignmentResult align(const Trajectory& est, const Trajectory& ref, AlignmentGroup group);

struct Conditioning {
  double gap = 0.0;
  double kappa = 0.0;
  bool degenerate = false;  // gap == 0
};

/// Spectral gap and conditioning number of coordinates a..b (1-based) of a
/// CMDS spectrum; only the positive eigenvalues take part.
Conditioning cmds_conditioning(const Eigen::VectorXd& spectrum, int a, int b);

}  // namespace ment
