#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/geometry.hpp"
#include "ment/rng.hpp"
#include "ment/series.hpp"

namespace ment {

/// Distribution of the time-invariant anchor vector. Either a finite set of
/// weighted atoms (exact population oracles are available) or an arbitrary
/// sampler; `second_moment` is E[chi chi^T] in both cases.
struct AnchorDistribution {
  std::string name;
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;
  std::function<Eigen::VectorXd(CounterRng&)> sampler;
  Eigen::MatrixXd second_moment;

  bool is_atomic() const { return !atoms.empty(); }
};

/// chi = sqrt(d) e_k with probability 1/d: equal-size d-community SBM anchors.
AnchorDistribution equal_community_anchor(int d);

/// A planted change in one mode-strength curve. `time` is 1-based.
struct PlantedChange {
  int mode = 1;        // 1-based mode index (importance order)
  int time = 1;
  int order = 0;       // 0: level jump, 1: slope change
};

/// Population description: phi(t) = block_scale * B(t) chi with
/// B(t) = sum_k xi_k(t) u_k u_k^T.
struct LatentModel {
  std::string name;
  int d = 0;
  int T = 0;
  Eigen::MatrixXd mode_basis;      // d x d, column k is u_k
  Eigen::MatrixXd mode_strengths;  // T x d, entry (t, k) is xi_k(t), t 0-based
  double block_scale = 1.0;
  AnchorDistribution anchor;
  /// mode_to_basis[m] is the basis column carrying mode m (0-based).
  std::vector<int> mode_to_basis;
  std::vector<PlantedChange> planted;

  /// B(t) for 0-based t.
  Eigen::MatrixXd block_matrix(int t) const;
  /// Throws ValidationError on a non-orthonormal basis, bad shapes, or a
  /// B(t) entry outside [0, 1]; the message names (t, i, j).
  void validate() const;
  /// True when E[chi chi^T] = I to 1e-12.
  bool is_isotropic() const;
  /// Anchor whitening G = E[chi chi^T]^{-1/2} (identity when isotropic).
  Eigen::MatrixXd whitening() const;
  /// Sorted 1-based change times across all modes.
  std::vector<int> change_times() const;
};

/// Sum_k xi_k u_k u_k^T. Rejects a basis whose Gram deviates from I by more
/// than 1e-10.
Eigen::MatrixXd build_block_matrix(const Eigen::VectorXd& strengths,
                                   const Eigen::MatrixXd& basis);

/// u_1 = (1,1,1)/sqrt3, u_2 = (1,1,-2)/sqrt6, u_3 = (1,-1,0)/sqrt2.
Eigen::MatrixXd three_community_basis();

/// T = 16, one change per mode: mode 1 slope change at 4, mode 2 jump at 9,
/// mode 3 jump at 13.
LatentModel dataset1_spec();
/// T = 70, two changes per mode at {11, 21, 31, 41, 51, 61}; mode m rides
/// basis vector u_{4-m}.
LatentModel dataset2_spec();
/// Looks up "dataset1" / "dataset2".
LatentModel preset_by_name(const std::string& name);

/// Finite-sample latent objects. Rows of X are anchor draws in canonical
/// (whitened) coordinates and Y(t) = X G(t) with G(t) symmetric.
struct LatentSample {
  Eigen::MatrixXd X;
  std::vector<Eigen::MatrixXd> Y;
  /// Atom index per node for atomic anchors, -1 otherwise.
  std::vector<int> community;

  Eigen::MatrixXd probability(int t) const { return X * Y[t].transpose(); }
  EmbeddingSeries as_embedding() const;
};

struct SampledNetwork {
  LatentSample latent;
  SnapshotSeries snapshots;
};

/// Anchor draws and Y(t) only, no edges. Same streams as sample_dynamic_sbm.
LatentSample sample_latent(const LatentModel& model, Eigen::Index n, std::uint64_t seed);

/// Draws anchors, builds Y(t), samples A_ij(t) ~ Bernoulli(P_ij(t)) for i<j.
/// Deterministic in `seed`. Non-isotropic anchors are whitened first.
SampledNetwork sample_dynamic_sbm(const LatentModel& model, Eigen::Index n,
                                  std::uint64_t seed);

/// Population M_phi(t, s) = E[(phi(t)-phi(s))(phi(t)-phi(s))^T] in canonical
/// coordinates, 0-based times.
Eigen::MatrixXd population_second_moment(const LatentModel& model, int t, int s);

/// Canonical mode directions of the population: u_{mode_to_basis[m]}.
/// Requires an isotropic anchor.
ModeBasis population_mode_basis(const LatentModel& model);

/// Closed-form population distance matrix for TV, MV or mode-k.
DistanceMatrix population_distance_matrix(const LatentModel& model, const Metric& metric);

/// Monte-Carlo estimate of a squared population distance from latent draws.
struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::int64_t draws = 0;
};

/// Averages (u^T (phi(t)-phi(s)))^2 over `draws` anchor draws, or
/// ||phi(t)-phi(s)||^2 when `direction` is empty.
MonteCarloEstimate monte_carlo_squared_distance(const LatentModel& model, int t, int s,
                                                const std::optional<Eigen::VectorXd>& direction,
                                                std::int64_t draws, std::uint64_t seed);

}  // namespace ment
