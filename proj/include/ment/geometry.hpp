#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ment/series.hpp"

namespace ment {

enum class MetricKind { kTraceVariation, kMaxDirectional, kModeWise };

/// A distance family. `mode` is the 0-based mode index for kModeWise.
struct Metric {
  MetricKind kind = MetricKind::kTraceVariation;
  int mode = -1;

  static Metric tv() { return {MetricKind::kTraceVariation, -1}; }
  static Metric mv() { return {MetricKind::kMaxDirectional, -1}; }
  static Metric mode_wise(int k) { return {MetricKind::kModeWise, k}; }

  bool operator==(const Metric&) const = default;
};

/// "tv", "mv", "mode1", "mode2", ... (mode labels are 1-based).
std::string to_string(const Metric& metric);
/// Inverse of to_string; throws ValidationError on an unknown tag.
Metric parse_metric(const std::string& tag);

/// Displacement second moment (1/n)(Y(t)-Y(s))^T (Y(t)-Y(s)).
struct SecondMoment {
  Eigen::MatrixXd M;
  Eigen::Index t = 0;
  Eigen::Index s = 0;
};

/// Ordered time pairs (t, s), t != s, 0-based.
class PairSet {
 public:
  PairSet() = default;
  /// Rejects out-of-range pairs, t == s and duplicates.
  PairSet(std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs, Eigen::Index T);

  static PairSet all_pairs(Eigen::Index T);
  static PairSet adjacent_pairs(Eigen::Index T);
  /// Pairs (t, s) with s < t <= s + width.
  static PairSet window_pairs(Eigen::Index T, Eigen::Index width);

  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

 private:
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs_;
};

/// Orthonormal mode directions (columns) with eigenvalues in nonincreasing
/// order. `degenerate` is set when two consecutive eigenvalues differ by at
/// most 1e-10 * lambda_1.
struct ModeBasis {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd eigenvalues;
  PairSet pairs;
  bool degenerate = false;
  std::vector<std::string> warnings;

  Eigen::Index d() const { return vectors.cols(); }
  Eigen::VectorXd direction(Eigen::Index k) const { return vectors.col(k); }
};

/// The fixed standard basis e_1..e_d (no eigen information).
ModeBasis standard_basis(Eigen::Index d);

/// Eigenbasis of a symmetric aggregated operator, sorted, oriented, and
/// checked for eigenvalue ties.
ModeBasis mode_basis_from_operator(const Eigen::MatrixXd& op, PairSet pairs);

/// T x T distance matrix with its squared form, centered Gram and spectrum.
struct DistanceMatrix {
  Metric metric;
  Eigen::MatrixXd D;
  Eigen::MatrixXd D2;
  Eigen::MatrixXd gram;
  Eigen::VectorXd gram_spectrum;  // nonincreasing

  Eigen::Index T() const { return D.rows(); }
};

/// Builds a DistanceMatrix from squared distances; validates symmetry,
/// nonnegativity and a zero diagonal.
DistanceMatrix distance_matrix_from_squared(const Eigen::MatrixXd& squared, const Metric& metric);
/// Same, from plain distances.
DistanceMatrix distance_matrix_from_distances(const Eigen::MatrixXd& distances,
                                              const Metric& metric);

SecondMoment displacement_second_moment(const EmbeddingSeries& Y, Eigen::Index t, Eigen::Index s);

double tv_distance(const SecondMoment& m);
double mv_distance(const SecondMoment& m);
/// sqrt(u^T M u); u must be unit length to 1e-10.
double modewise_distance(const SecondMoment& m, const Eigen::VectorXd& u);

/// Squared versions, clamped at zero for tiny negative rounding.
double tv_distance_squared(const Eigen::MatrixXd& M);
double mv_distance_squared(const Eigen::MatrixXd& M);
double modewise_distance_squared(const Eigen::MatrixXd& M, const Eigen::VectorXd& u);

/// Sum of M(t, s) over the pair set, eigendecomposed.
ModeBasis aggregate_operator(const EmbeddingSeries& Y, const PairSet& pairs);

/// Distances between all time pairs. Mode-wise metrics need `basis`.
DistanceMatrix distance_matrix(const EmbeddingSeries& Y, const Metric& metric,
                               const ModeBasis* basis = nullptr);

/// Distance matrices for TV, MV and every mode from one pass over the pairs.
std::vector<DistanceMatrix> all_distance_matrices(const EmbeddingSeries& Y, const ModeBasis& basis);

}  // namespace ment
