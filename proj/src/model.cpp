#include "ment/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ment/errors.hpp"
#include "ment/linalg.hpp"

namespace ment {

namespace {

constexpr double kBasisTol = 1e-10;
constexpr double kProbTol = 1e-12;

// Dataset 2 mode strengths. Magnitudes are free parameters: these keep every
// B(t) entry inside [0.05, 0.88], order the aggregated mode energies
// u3 > u2 > u1, and give each planted change enough contrast to be found by
// the level/slope scores at n = 500.
constexpr double kD2U3Low = 0.10;
constexpr double kD2U3High = 0.75;
constexpr double kD2U2Before = 0.05;
constexpr double kD2U2After = 0.45;
constexpr double kD2U2Slope = -0.04;
constexpr double kD2U1Base = 1.0;
constexpr double kD2U1SlopeBefore = -0.03;
constexpr double kD2U1SlopeAfter = 0.01;
constexpr double kD2U1Jump = -0.25;

AnchorDistribution atomic_anchor(std::string name, std::vector<VectorXd> atoms,
                                 std::vector<double> weights) {
  AnchorDistribution a;
  a.name = std::move(name);
  const Index d = atoms.front().size();
  a.second_moment = MatrixXd::Zero(d, d);
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    a.second_moment += weights[i] * atoms[i] * atoms[i].transpose();
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("anchor weights must sum to 1");
  a.atoms = std::move(atoms);
  a.weights = std::move(weights);
  return a;
}

// Draws one anchor and reports the atom index (or -1).
VectorXd draw_anchor(const AnchorDistribution& a, CounterRng& rng, int& atom) {
  if (!a.is_atomic()) {
    atom = -1;
    return a.sampler(rng);
  }
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    acc += a.weights[i];
    if (u < acc || i + 1 == a.atoms.size()) {
      atom = static_cast<int>(i);
      return a.atoms[i];
    }
  }
  atom = static_cast<int>(a.atoms.size()) - 1;
  return a.atoms.back();
}

// Symmetric G(t) with Y(t) = X G(t) in whitened coordinates.
MatrixXd canonical_block(const LatentModel& m, int t, const MatrixXd& inv_whitening) {
  return m.block_scale * inv_whitening * m.block_matrix(t) * inv_whitening;
}

}  // namespace

AnchorDistribution equal_community_anchor(int d) {
  if (d < 1) throw ValidationError("equal_community_anchor: d must be >= 1");
  std::vector<VectorXd> atoms;
  for (int k = 0; k < d; ++k) {
    VectorXd e = VectorXd::Zero(d);
    e(k) = std::sqrt(static_cast<double>(d));
    atoms.push_back(e);
  }
  return atomic_anchor("equal_community", std::move(atoms),
                       std::vector<double>(d, 1.0 / d));
}

MatrixXd build_block_matrix(const VectorXd& strengths, const MatrixXd& basis) {
  if (basis.rows() != basis.cols() || basis.cols() != strengths.size())
    throw ValidationError("build_block_matrix: basis must be d x d with d strengths");
  if (orthonormality_defect(basis) > kBasisTol)
    throw ValidationError("build_block_matrix: basis is not orthonormal");
  return basis * strengths.asDiagonal() * basis.transpose();
}

MatrixXd three_community_basis() {
  MatrixXd u(3, 3);
  u.col(0) = Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0);
  u.col(1) = Eigen::Vector3d(1, 1, -2) / std::sqrt(6.0);
  u.col(2) = Eigen::Vector3d(1, -1, 0) / std::sqrt(2.0);
  return u;
}

MatrixXd LatentModel::block_matrix(int t) const {
  if (t < 0 || t >= T) throw ValidationError("block_matrix: time out of range");
  return build_block_matrix(mode_strengths.row(t).transpose(), mode_basis);
}

void LatentModel::validate() const {
  if (d < 1 || T < 2) throw ValidationError(name + ": need d >= 1 and T >= 2");
  if (mode_basis.rows() != d || mode_basis.cols() != d)
    throw ValidationError(name + ": mode basis must be d x d");
  if (orthonormality_defect(mode_basis) > kBasisTol)
    throw ValidationError(name + ": mode basis is not orthonormal");
  if (mode_strengths.rows() != T || mode_strengths.cols() != d)
    throw ValidationError(name + ": mode strengths must be T x d");
  if (anchor.second_moment.rows() != d) throw ValidationError(name + ": anchor dimension mismatch");
  std::vector<int> perm = mode_to_basis;
  std::sort(perm.begin(), perm.end());
  for (int k = 0; k < d; ++k)
    if (static_cast<int>(perm.size()) != d || perm[k] != k)
      throw ValidationError(name + ": mode_to_basis must be a permutation of 0..d-1");
  for (const auto& c : planted) {
    if (c.mode < 1 || c.mode > d || c.time < 1 || c.time > T || (c.order != 0 && c.order != 1))
      throw ValidationError(name + ": malformed planted change");
  }
  if (!anchor.is_atomic()) return;
  // P_ij = chi_i^T (s B) chi_j ranges over atom pairs.
  for (int t = 0; t < T; ++t) {
    const MatrixXd B = block_scale * block_matrix(t);
    for (std::size_t i = 0; i < anchor.atoms.size(); ++i)
      for (std::size_t j = 0; j < anchor.atoms.size(); ++j) {
        const double p = anchor.atoms[i].dot(B * anchor.atoms[j]);
        if (p < -kProbTol || p > 1.0 + kProbTol) {
          std::ostringstream msg;
          msg << name << ": edge probability " << p << " outside [0, 1] at t=" << t + 1
              << ", i=" << i + 1 << ", j=" << j + 1;
          throw ValidationError(msg.str());
        }
      }
  }
}

bool LatentModel::is_isotropic() const {
  return (anchor.second_moment - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-12;
}

MatrixXd LatentModel::whitening() const {
  if (is_isotropic()) return MatrixXd::Identity(d, d);
  return symmetric_power(anchor.second_moment, -0.5);
}

std::vector<int> LatentModel::change_times() const {
  std::vector<int> out;
  for (const auto& c : planted) out.push_back(c.time);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LatentModel dataset1_spec() {
  LatentModel m;
  m.name = "dataset1";
  m.d = 3;
  m.T = 16;
  m.mode_basis = three_community_basis();
  m.block_scale = 1.0 / 3.0;
  m.anchor = equal_community_anchor(3);
  m.mode_to_basis = {0, 1, 2};
  m.mode_strengths.resize(m.T, 3);
  for (int t = 1; t <= m.T; ++t) {
    m.mode_strengths(t - 1, 0) = 0.30 + 0.035 * std::max(t - 4, 0);
    m.mode_strengths(t - 1, 1) = t < 9 ? 0.15 : 0.35;
    m.mode_strengths(t - 1, 2) = t < 13 ? 0.10 : 0.25;
  }
  m.planted = {{1, 4, 1}, {2, 9, 0}, {3, 13, 0}};
  m.validate();
  return m;
}

LatentModel dataset2_spec() {
  LatentModel m;
  m.name = "dataset2";
  m.d = 3;
  m.T = 70;
  m.mode_basis = three_community_basis();
  m.block_scale = 1.0 / 3.0;
  m.anchor = equal_community_anchor(3);
  m.mode_to_basis = {2, 1, 0};
  m.mode_strengths.resize(m.T, 3);
  for (int t = 1; t <= m.T; ++t) {
    m.mode_strengths(t - 1, 2) = (t >= 31 && t < 61) ? kD2U3High : kD2U3Low;
    m.mode_strengths(t - 1, 1) =
        (t < 21 ? kD2U2Before : kD2U2After) + kD2U2Slope * std::max(t - 51, 0);
    m.mode_strengths(t - 1, 0) = kD2U1Base + kD2U1SlopeBefore * std::min(t - 11, 0) +
                                 kD2U1SlopeAfter * std::max(t - 11, 0) +
                                 (t >= 41 ? kD2U1Jump : 0.0);
  }
  m.planted = {{1, 31, 0}, {1, 61, 0}, {2, 21, 0}, {2, 51, 1}, {3, 11, 1}, {3, 41, 0}};
  m.validate();
  return m;
}

LatentModel preset_by_name(const std::string& name) {
  if (name == "dataset1") return dataset1_spec();
  if (name == "dataset2") return dataset2_spec();
  throw ValidationError("unknown preset '" + name + "' (expected dataset1 or dataset2)");
}

EmbeddingSeries LatentSample::as_embedding() const {
  EmbeddingSeries e;
  e.blocks = Y;
  e.flavor = EmbeddingFlavor::kLatent;
  return e;
}

LatentSample sample_latent(const LatentModel& model, Index n, std::uint64_t seed) {
  model.validate();
  if (n < 2) throw ValidationError("sample_latent: n must be >= 2");
  const MatrixXd W = model.whitening();
  const MatrixXd Winv = model.is_isotropic() ? MatrixXd::Identity(model.d, model.d)
                                             : symmetric_power(model.anchor.second_moment, 0.5);
  CounterRng anchor_rng = CounterRng(seed).split(0);
  LatentSample lat;
  lat.X.resize(n, model.d);
  lat.community.assign(n, -1);
  for (Index i = 0; i < n; ++i) {
    int atom = -1;
    lat.X.row(i) = (W * draw_anchor(model.anchor, anchor_rng, atom)).transpose();
    lat.community[i] = atom;
  }
  for (int t = 0; t < model.T; ++t) lat.Y.push_back(lat.X * canonical_block(model, t, Winv));
  return lat;
}

SampledNetwork sample_dynamic_sbm(const LatentModel& model, Index n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("sample_dynamic_sbm: n must be >= 2");
  SampledNetwork out;
  out.latent = sample_latent(model, n, seed);
  const LatentSample& lat = out.latent;
  CounterRng root(seed);

  SnapshotSeries& snaps = out.snapshots;
  snaps.n = n;
  snaps.node_ids = default_node_ids(n);
  for (int t = 0; t < model.T; ++t) {
    const MatrixXd P = lat.probability(t);
    CounterRng rng = root.split(1 + static_cast<std::uint64_t>(t));
    MatrixXd A = MatrixXd::Zero(n, n);
    for (Index j = 1; j < n; ++j) {
      for (Index i = 0; i < j; ++i) {
        const double p = P(i, j);
        if (p < -kProbTol || p > 1.0 + kProbTol || !std::isfinite(p)) {
          std::ostringstream msg;
          msg << "sample_dynamic_sbm: P(" << i << ", " << j << ") = " << p << " at t=" << t + 1;
          throw ValidationError(msg.str());
        }
        if (rng.bernoulli(p)) A(i, j) = A(j, i) = 1.0;
      }
    }
    snaps.adjacency.push_back(std::move(A));
  }
  return out;
}

MatrixXd population_second_moment(const LatentModel& model, int t, int s) {
  const MatrixXd half = model.is_isotropic() ? MatrixXd::Identity(model.d, model.d)
                                             : symmetric_power(model.anchor.second_moment, 0.5);
  const MatrixXd dB = model.block_scale * (model.block_matrix(t) - model.block_matrix(s));
  const MatrixXd M = half * dB * model.anchor.second_moment * dB * half;
  return 0.5 * (M + M.transpose());
}

ModeBasis population_mode_basis(const LatentModel& model) {
  if (!model.is_isotropic())
    throw ValidationError("population_mode_basis: anchor second moment must be the identity");
  ModeBasis b;
  b.vectors.resize(model.d, model.d);
  b.eigenvalues.resize(model.d);
  b.pairs = PairSet::all_pairs(model.T);
  MatrixXd agg = MatrixXd::Zero(model.d, model.d);
  for (const auto& [t, s] : b.pairs.pairs())
    agg += population_second_moment(model, static_cast<int>(t), static_cast<int>(s));
  for (int m = 0; m < model.d; ++m) {
    b.vectors.col(m) = model.mode_basis.col(model.mode_to_basis[m]);
    b.eigenvalues(m) = b.vectors.col(m).dot(agg * b.vectors.col(m));
  }
  for (int m = 1; m < model.d; ++m)
    if (b.eigenvalues(m) > b.eigenvalues(m - 1) + 1e-12)
      b.warnings.push_back("mode order does not follow aggregated energy");
  return b;
}

DistanceMatrix population_distance_matrix(const LatentModel& model, const Metric& metric) {
  const int T = model.T;
  VectorXd u;
  if (metric.kind == MetricKind::kModeWise) {
    if (metric.mode < 0 || metric.mode >= model.d)
      throw ValidationError("population_distance_matrix: mode out of range");
    u = population_mode_basis(model).direction(metric.mode);
  }
  MatrixXd D2 = MatrixXd::Zero(T, T);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < t; ++s) {
      const MatrixXd M = population_second_moment(model, t, s);
      double v = 0.0;
      switch (metric.kind) {
        case MetricKind::kTraceVariation:
          v = tv_distance_squared(M);
          break;
        case MetricKind::kMaxDirectional:
          v = mv_distance_squared(M);
          break;
        case MetricKind::kModeWise:
          v = modewise_distance_squared(M, u);
          break;
      }
      D2(t, s) = D2(s, t) = v;
    }
  return distance_matrix_from_squared(D2, metric);
}

MonteCarloEstimate monte_carlo_squared_distance(const LatentModel& model, int t, int s,
                                                const std::optional<VectorXd>& direction,
                                                std::int64_t draws, std::uint64_t seed) {
  if (draws < 2) throw ValidationError("monte_carlo_squared_distance: need at least 2 draws");
  const MatrixXd W = model.whitening();
  const MatrixXd Winv = model.is_isotropic() ? MatrixXd::Identity(model.d, model.d)
                                             : symmetric_power(model.anchor.second_moment, 0.5);
  const MatrixXd G = canonical_block(model, t, Winv) - canonical_block(model, s, Winv);
  if (direction && std::abs(direction->norm() - 1.0) > 1e-10)
    throw ValidationError("monte_carlo_squared_distance: direction must be unit length");
  CounterRng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t i = 0; i < draws; ++i) {
    int atom = -1;
    const VectorXd delta = G * (W * draw_anchor(model.anchor, rng, atom));
    const double v = direction ? std::pow(direction->dot(delta), 2) : delta.squaredNorm();
    // Welford update.
    const double diff = v - mean;
    mean += diff / static_cast<double>(i + 1);
    m2 += diff * (v - mean);
  }
  MonteCarloEstimate e;
  e.mean = mean;
  e.draws = draws;
  e.standard_error = std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws));
  return e;
}

}  // namespace ment
