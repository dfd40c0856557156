#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/geometry.hpp"
#include "ment/series.hpp"
#include "ment/trajectory.hpp"

namespace ment {

/// Row differences Y(t) - Y(s), n x d.
Eigen::MatrixXd node_displacements(const EmbeddingSeries& Y, Eigen::Index t, Eigen::Index s);

/// Per-node share of one distance. TV values are ||Delta_i||^2 / n and sum to
/// d_TV^2; mode-k values are <Delta_i, u_k> / sqrt(n) and their squares sum to
/// d_k^2.
struct AttributionTable {
  Eigen::Index t = 0;
  Eigen::Index s = 0;
  Metric metric;
  Eigen::VectorXd values;
  std::vector<std::string> node_ids;
  double distance_squared = 0.0;

  bool is_signed() const { return metric.kind == MetricKind::kModeWise; }
  /// Sum of values (TV) or of squared values (mode-k).
  double total() const;
};

/// MV has no per-node table; asking for it throws ValidationError, as does a
/// mode metric without a basis.
AttributionTable attribute(const EmbeddingSeries& Y, Eigen::Index t, Eigen::Index s,
                           const Metric& metric, const ModeBasis* basis = nullptr,
                           const std::vector<std::string>& node_ids = {});

struct RankedNode {
  Eigen::Index node = 0;
  std::string id;
  double value = 0.0;
};

struct TopKReport {
  std::vector<RankedNode> positive;  // largest values first
  std::vector<RankedNode> negative;  // smallest values first
};

/// Ties are broken by node index.
TopKReport top_k_report(const AttributionTable& table, int K);

struct PairResidual {
  Eigen::Index t = 0;
  Eigen::Index s = 0;
  double trajectory_sq = 0.0;  // ||psi(t) - psi(s)||^2
  double node_average = 0.0;   // (1/n) sum_i node term
  double residual = 0.0;       // |difference|
};

/// Node-to-trajectory control for TV or one mode: every pairwise residual is
/// at most 2 sqrt(sum_{i>c} lambda_i^2), and the squared residuals summed
/// over pairs are at most 4 (T-1) sum_{i>c} lambda_i^2.
struct BoundReport {
  Metric metric;
  Eigen::Index c = 0;
  double tail_energy = 0.0;  // sum_{i>c} lambda_i^2
  double pairwise_bound = 0.0;
  double aggregated_residual = 0.0;
  double aggregated_bound = 0.0;
  double max_residual = 0.0;
  double min_slack = 0.0;
  std::vector<PairResidual> pairs;
  bool pairwise_holds = true;
  bool aggregated_holds = true;
  bool hypothesis_met = true;  // at least c positive Gram eigenvalues
};

BoundReport pairwise_bound_check(const Trajectory& trajectory, const EmbeddingSeries& Y,
                                 const Metric& metric, const ModeBasis* basis = nullptr);

/// Two-sided MV check: the residual against the pairwise top eigenvalue of
/// M(t, s), plus the cruder bracket by (1/(nd)) and (1/n) times the summed
/// squared displacements.
struct MvSandwichReport {
  double bound = 0.0;
  double max_residual = 0.0;
  bool holds = true;
  bool bracket_holds = true;
};

MvSandwichReport mv_sandwich_check(const Trajectory& trajectory, const EmbeddingSeries& Y);

}  // namespace ment
