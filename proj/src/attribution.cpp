#include "ment/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ment/errors.hpp"

namespace ment {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kSlackRel = 1e-9;

double tail_energy(const Trajectory& tr) {
  double e = 0.0;
  for (Index i = tr.c(); i < tr.spectrum.size(); ++i) e += tr.spectrum(i) * tr.spectrum(i);
  return e;
}

void check_pair(const EmbeddingSeries& Y, Index t, Index s) {
  if (t < 0 || s < 0 || t >= Y.T() || s >= Y.T())
    throw ValidationError("time pair outside the embedding series");
}

}  // namespace

MatrixXd node_displacements(const EmbeddingSeries& Y, Index t, Index s) {
  check_pair(Y, t, s);
  return Y.blocks[t] - Y.blocks[s];
}

double AttributionTable::total() const {
  return is_signed() ? values.squaredNorm() : values.sum();
}

AttributionTable attribute(const EmbeddingSeries& Y, Index t, Index s, const Metric& metric,
                           const ModeBasis* basis, const std::vector<std::string>& node_ids) {
  const MatrixXd delta = node_displacements(Y, t, s);
  const double n = static_cast<double>(Y.n());
  AttributionTable tab;
  tab.t = t;
  tab.s = s;
  tab.metric = metric;
  switch (metric.kind) {
    case MetricKind::kTraceVariation:
      tab.values = delta.rowwise().squaredNorm() / n;
      break;
    case MetricKind::kModeWise: {
      if (!basis) throw ValidationError("attribute: mode-wise attribution needs a mode basis");
      if (metric.mode < 0 || metric.mode >= basis->d())
        throw ValidationError("attribute: mode index outside the basis");
      if (basis->vectors.rows() != Y.d()) throw ValidationError("attribute: basis dimension mismatch");
      tab.values = delta * basis->direction(metric.mode) / std::sqrt(n);
      break;
    }
    case MetricKind::kMaxDirectional:
      throw ValidationError("attribute: MV has no node decomposition; use mv_sandwich_check");
  }
  tab.distance_squared = tab.total();
  if (!node_ids.empty()) {
    if (static_cast<Index>(node_ids.size()) != Y.n())
      throw ValidationError("attribute: node id count differs from n");
    tab.node_ids = node_ids;
  } else {
    tab.node_ids = default_node_ids(Y.n());
  }
  return tab;
}

TopKReport top_k_report(const AttributionTable& table, int K) {
  if (K < 0) throw ValidationError("top_k_report: K must be >= 0");
  const Index n = table.values.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  auto make = [&](Index i) {
    return RankedNode{i, i < static_cast<Index>(table.node_ids.size()) ? table.node_ids[i]
                                                                      : std::to_string(i),
                      table.values(i)};
  };
  TopKReport rep;
  const Index k = std::min<Index>(K, n);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return table.values(a) > table.values(b); });
  for (Index i = 0; i < k; ++i) rep.positive.push_back(make(order[i]));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return table.values(a) < table.values(b); });
  for (Index i = 0; i < k; ++i) rep.negative.push_back(make(order[i]));
  return rep;
}

BoundReport pairwise_bound_check(const Trajectory& trajectory, const EmbeddingSeries& Y,
                                 const Metric& metric, const ModeBasis* basis) {
  if (trajectory.T() != Y.T()) throw ValidationError("pairwise_bound_check: T mismatch");
  if (metric.kind == MetricKind::kMaxDirectional)
    throw ValidationError("pairwise_bound_check: use mv_sandwich_check for MV");
  BoundReport rep;
  rep.metric = metric;
  rep.c = trajectory.c();
  rep.hypothesis_met = trajectory.positive_count >= trajectory.c();
  rep.tail_energy = tail_energy(trajectory);
  rep.pairwise_bound = 2.0 * std::sqrt(rep.tail_energy);
  rep.aggregated_bound = 4.0 * static_cast<double>(Y.T() - 1) * rep.tail_energy;

  double scale = 0.0;
  for (Index t = 0; t < Y.T(); ++t)
    for (Index s = t + 1; s < Y.T(); ++s) {
      const AttributionTable tab = attribute(Y, t, s, metric, basis);
      PairResidual r;
      r.t = t;
      r.s = s;
      r.trajectory_sq = (trajectory.coords.row(t) - trajectory.coords.row(s)).squaredNorm();
      r.node_average = tab.total();
      r.residual = std::abs(r.trajectory_sq - r.node_average);
      scale = std::max(scale, r.node_average);
      rep.pairs.push_back(r);
    }
  rep.min_slack = rep.pairwise_bound;
  for (const auto& r : rep.pairs) {
    rep.max_residual = std::max(rep.max_residual, r.residual);
    rep.min_slack = std::min(rep.min_slack, rep.pairwise_bound - r.residual);
    rep.aggregated_residual += r.residual * r.residual;
  }
  const double tol = kSlackRel * std::max(1.0, scale);
  rep.pairwise_holds = rep.max_residual <= rep.pairwise_bound + tol;
  rep.aggregated_holds = rep.aggregated_residual <= rep.aggregated_bound + tol * tol * rep.pairs.size() +
                                                         2 * tol * std::sqrt(rep.aggregated_bound);
  return rep;
}

MvSandwichReport mv_sandwich_check(const Trajectory& trajectory, const EmbeddingSeries& Y) {
  if (trajectory.T() != Y.T()) throw ValidationError("mv_sandwich_check: T mismatch");
  MvSandwichReport rep;
  rep.bound = 2.0 * std::sqrt(tail_energy(trajectory));
  const double d = static_cast<double>(Y.d());
  for (Index t = 0; t < Y.T(); ++t)
    for (Index s = t + 1; s < Y.T(); ++s) {
      const SecondMoment m = displacement_second_moment(Y, t, s);
      const double top = mv_distance_squared(m.M);
      const double total = tv_distance_squared(m.M);
      const double traj = (trajectory.coords.row(t) - trajectory.coords.row(s)).squaredNorm();
      const double tol = kSlackRel * std::max(1.0, total);
      rep.max_residual = std::max(rep.max_residual, std::abs(traj - top));
      if (traj < total / d - rep.bound - tol || traj > total + rep.bound + tol) rep.bracket_holds = false;
    }
  rep.holds = rep.max_residual <= rep.bound + kSlackRel * std::max(1.0, rep.bound);
  return rep;
}

}  // namespace ment
