#include "ment/geometry.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "ment/errors.hpp"
#include "ment/linalg.hpp"
#include "ment/trajectory.hpp"

namespace ment {

std::string to_string(const Metric& metric) {
  switch (metric.kind) {
    case MetricKind::kTraceVariation:
      return "tv";
    case MetricKind::kMaxDirectional:
      return "mv";
    case MetricKind::kModeWise:
      return "mode" + std::to_string(metric.mode + 1);
  }
  return "unknown";
}

Metric parse_metric(const std::string& tag) {
  if (tag == "tv") return Metric::tv();
  if (tag == "mv") return Metric::mv();
  if (tag.rfind("mode", 0) == 0 && tag.size() > 4) {
    const std::string digits = tag.substr(4);
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      const int k = std::stoi(digits);
      if (k >= 1) return Metric::mode_wise(k - 1);
    }
  }
  throw ValidationError("unknown metric tag '" + tag + "' (expected tv, mv or modeK)");
}

PairSet::PairSet(std::vector<std::pair<Index, Index>> pairs, Index T) : pairs_(std::move(pairs)) {
  std::set<std::pair<Index, Index>> seen;
  for (const auto& [t, s] : pairs_) {
    if (t < 0 || s < 0 || t >= T || s >= T) {
      throw ValidationError("PairSet: pair (" + std::to_string(t) + ", " + std::to_string(s) +
                            ") outside [0, " + std::to_string(T) + ")");
    }
    if (t == s) throw ValidationError("PairSet: pair with t == s");
    if (!seen.insert({t, s}).second) throw ValidationError("PairSet: duplicate pair");
  }
}

PairSet PairSet::all_pairs(Index T) {
  std::vector<std::pair<Index, Index>> p;
  for (Index t = 0; t < T; ++t)
    for (Index s = 0; s < t; ++s) p.emplace_back(t, s);
  return PairSet(std::move(p), T);
}

PairSet PairSet::adjacent_pairs(Index T) {
  std::vector<std::pair<Index, Index>> p;
  for (Index t = 1; t < T; ++t) p.emplace_back(t, t - 1);
  return PairSet(std::move(p), T);
}

PairSet PairSet::window_pairs(Index T, Index width) {
  if (width < 1) throw ValidationError("PairSet::window_pairs: width must be >= 1");
  std::vector<std::pair<Index, Index>> p;
  for (Index t = 0; t < T; ++t)
    for (Index s = std::max<Index>(0, t - width); s < t; ++s) p.emplace_back(t, s);
  return PairSet(std::move(p), T);
}

ModeBasis standard_basis(Index d) {
  ModeBasis b;
  b.vectors = MatrixXd::Identity(d, d);
  b.eigenvalues = VectorXd::Zero(d);
  return b;
}

ModeBasis mode_basis_from_operator(const MatrixXd& op, PairSet pairs) {
  const SymmetricEigen eig = symmetric_eigen_desc(0.5 * (op + op.transpose()));
  ModeBasis b;
  b.vectors = eig.vectors;
  b.eigenvalues = eig.values;
  b.pairs = std::move(pairs);
  const double top = eig.values.size() ? std::abs(eig.values(0)) : 0.0;
  for (Index k = 0; k + 1 < eig.values.size(); ++k) {
    if (std::abs(eig.values(k) - eig.values(k + 1)) <= 1e-10 * top) {
      b.degenerate = true;
      std::ostringstream msg;
      msg << "modes " << k + 1 << " and " << k + 2 << " have tied eigenvalues ("
          << eig.values(k) << "); directions are solver-ordered";
      b.warnings.push_back(msg.str());
    }
  }
  return b;
}

namespace {

void check_distance_input(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw ValidationError(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m(i, i)) > 1e-12 * scale) {
      throw ValidationError(std::string(what) + ": nonzero diagonal");
    }
    for (Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) throw ValidationError(std::string(what) + ": non-finite entry");
      if (m(i, j) < 0.0) throw ValidationError(std::string(what) + ": negative entry");
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) {
        throw ValidationError(std::string(what) + ": matrix is not symmetric");
      }
    }
  }
}

// Clamps rounding-level negatives of a PSD quadratic form.
double clamp_psd_value(double v, double trace, const char* what) {
  if (v >= 0.0) return v;
  if (v >= -1e-10 * std::max(std::abs(trace), 1e-300)) return 0.0;
  throw ValidationError(std::string(what) + ": second-moment matrix is not positive semidefinite");
}

}  // namespace

DistanceMatrix distance_matrix_from_squared(const MatrixXd& squared, const Metric& metric) {
  check_distance_input(squared, "distance_matrix_from_squared");
  DistanceMatrix out;
  out.metric = metric;
  out.D2 = 0.5 * (squared + squared.transpose());
  out.D2.diagonal().setZero();
  out.D = out.D2.cwiseSqrt();
  out.gram = double_center_squared(out.D2);
  out.gram_spectrum = symmetric_eigen_desc(out.gram).values;
  return out;
}

DistanceMatrix distance_matrix_from_distances(const MatrixXd& distances, const Metric& metric) {
  check_distance_input(distances, "distance_matrix_from_distances");
  DistanceMatrix out = distance_matrix_from_squared(distances.cwiseProduct(distances), metric);
  out.D = 0.5 * (distances + distances.transpose());
  out.D.diagonal().setZero();
  return out;
}

SecondMoment displacement_second_moment(const EmbeddingSeries& Y, Index t, Index s) {
  if (t < 0 || s < 0 || t >= Y.T() || s >= Y.T()) {
    throw ValidationError("displacement_second_moment: time index out of range");
  }
  SecondMoment out;
  out.t = t;
  out.s = s;
  const MatrixXd delta = Y.blocks[t] - Y.blocks[s];
  out.M = MatrixXd::Zero(Y.d(), Y.d());
  out.M.selfadjointView<Eigen::Lower>().rankUpdate(delta.transpose(), 1.0 / static_cast<double>(Y.n()));
  out.M.triangularView<Eigen::StrictlyUpper>() = out.M.transpose();
  return out;
}

double tv_distance_squared(const MatrixXd& M) {
  const double tr = M.trace();
  return clamp_psd_value(tr, tr, "tv_distance");
}

double mv_distance_squared(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(M, Eigen::EigenvaluesOnly);
  return clamp_psd_value(solver.eigenvalues().maxCoeff(), M.trace(), "mv_distance");
}

double modewise_distance_squared(const MatrixXd& M, const VectorXd& u) {
  if (u.size() != M.rows()) throw ValidationError("modewise_distance: dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-10) throw ValidationError("modewise_distance: direction is not unit length");
  return clamp_psd_value(u.dot(M * u), M.trace(), "modewise_distance");
}

double tv_distance(const SecondMoment& m) { return std::sqrt(tv_distance_squared(m.M)); }
double mv_distance(const SecondMoment& m) { return std::sqrt(mv_distance_squared(m.M)); }
double modewise_distance(const SecondMoment& m, const VectorXd& u) {
  return std::sqrt(modewise_distance_squared(m.M, u));
}

ModeBasis aggregate_operator(const EmbeddingSeries& Y, const PairSet& pairs) {
  Y.validate();
  if (pairs.empty()) throw ValidationError("aggregate_operator: empty pair set");
  MatrixXd op = MatrixXd::Zero(Y.d(), Y.d());
  for (const auto& [t, s] : pairs.pairs()) op += displacement_second_moment(Y, t, s).M;
  return mode_basis_from_operator(op, pairs);
}

namespace {

double squared_distance(const MatrixXd& M, const Metric& metric, const ModeBasis* basis) {
  switch (metric.kind) {
    case MetricKind::kTraceVariation:
      return tv_distance_squared(M);
    case MetricKind::kMaxDirectional:
      return mv_distance_squared(M);
    case MetricKind::kModeWise:
      return modewise_distance_squared(M, basis->vectors.col(metric.mode));
  }
  return 0.0;
}

void check_basis(const Metric& metric, const ModeBasis* basis, Index d) {
  if (metric.kind != MetricKind::kModeWise) return;
  if (basis == nullptr) throw ValidationError("distance_matrix: mode-wise metric requires a mode basis");
  if (basis->vectors.rows() != d) throw ValidationError("distance_matrix: basis dimension mismatch");
  if (metric.mode < 0 || metric.mode >= basis->vectors.cols()) {
    throw ValidationError("distance_matrix: mode index out of range");
  }
}

}  // namespace

DistanceMatrix distance_matrix(const EmbeddingSeries& Y, const Metric& metric, const ModeBasis* basis) {
  Y.validate();
  check_basis(metric, basis, Y.d());
  const Index T = Y.T();
  MatrixXd sq = MatrixXd::Zero(T, T);
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s < t; ++s) {
      sq(t, s) = sq(s, t) = squared_distance(displacement_second_moment(Y, t, s).M, metric, basis);
    }
  }
  return distance_matrix_from_squared(sq, metric);
}

std::vector<DistanceMatrix> all_distance_matrices(const EmbeddingSeries& Y, const ModeBasis& basis) {
  Y.validate();
  const Index T = Y.T();
  const Index d = Y.d();
  std::vector<Metric> metrics{Metric::tv(), Metric::mv()};
  for (Index k = 0; k < basis.d(); ++k) metrics.push_back(Metric::mode_wise(static_cast<int>(k)));
  for (const Metric& m : metrics) check_basis(m, &basis, d);
  std::vector<MatrixXd> sq(metrics.size(), MatrixXd::Zero(T, T));
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s < t; ++s) {
      const MatrixXd M = displacement_second_moment(Y, t, s).M;
      for (std::size_t i = 0; i < metrics.size(); ++i) {
        sq[i](t, s) = sq[i](s, t) = squared_distance(M, metrics[i], &basis);
      }
    }
  }
  std::vector<DistanceMatrix> out;
  out.reserve(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) out.push_back(distance_matrix_from_squared(sq[i], metrics[i]));
  return out;
}

}  // namespace ment
