#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ment {

// Times in this module are 1-based, matching how change points are reported.

/// Least-squares fit of a single-knot template.
/// Order 0: psi(t) = a_L for t < k, a_R for t >= k; knots 2..T.
/// Order 1: psi(t) = a + b_L min(t, k) + b_R max(t - k, 0); knots 2..T-1.
struct PiecewiseFit {
  int order = 0;
  int knot = 0;
  Eigen::VectorXd params;  // (a_L, a_R) or (a, b_L, b_R)
  double rss = 0.0;
  std::vector<int> candidates;
  Eigen::VectorXd rss_curve;  // aligned with candidates
  Eigen::VectorXd fitted;
  bool no_signal = false;     // every knot gives the same RSS
};

PiecewiseFit fit_piecewise(const Eigen::VectorXd& psi, int order);

/// Noise-free template of length T.
Eigen::VectorXd piecewise_template(int T, int order, int knot, const Eigen::VectorXd& params);

/// Separation lower bound for a noiseless template with knot t_star versus
/// the best template with knot k.
struct SeparationCheck {
  int order = 0;
  int T = 0;
  int t_star = 0;
  int k = 0;
  double direct = 0.0;                // min_theta sum_t (truth - template_k)^2
  std::optional<double> closed_form;  // order 0 only
  double contrast = 0.0;              // |a_L - a_R|^2 or |b_L - b_R|^2
  double alpha = 0.0;                 // constant from the published argument
  double alpha_exact = 0.0;           // constant from the exact per-knot values
  double bound() const { return alpha * contrast * std::abs(k - t_star); }
  double bound_exact() const { return alpha_exact * contrast * std::abs(k - t_star); }
  bool holds() const;
  bool holds_exact() const;
};

/// x y (y+1)(2xy + x - y + 1) / (6 z (z^2 - 1)).
double hinge_separation_coefficient(double x, double y, double z);
/// Published constant: order 0 min(t*-1, T-t*+1)/(T-1); order 1 the minimum of
/// the hinge coefficient over both sides with the boundary cases t* = 2 and
/// t* = T-1 handled separately.
double separation_alpha(int order, int T, int t_star);
/// Smallest direct/(contrast |k - t*|) over the candidate knots, from the
/// closed-form segment values.
double separation_alpha_exact(int order, int T, int t_star);
SeparationCheck separation_oracle(int order, int T, int t_star, int k,
                                  const Eigen::VectorXd& theta);

/// Maximum-likelihood variances of the local linear trend model.
struct LltVariances {
  double observation = 0.0;
  double level = 0.0;
  double slope = 0.0;
};

/// Level and slope disturbance scores for one trajectory.
struct ScoreSeries {
  int mode = 0;  // 1-based mode label
  Eigen::VectorXd level;
  Eigen::VectorXd slope;
  LltVariances variances;
  double scale = 0.0;  // standard deviation of the raw trajectory
  double loglik = 0.0;
  bool degenerate = false;
};

/// Gaussian log-likelihood of standardized data z, dropping the first two
/// (diffuse) terms.
double llt_loglik(const Eigen::VectorXd& z, const LltVariances& v);
LltVariances llt_fit(const Eigen::VectorXd& z);

/// Fixed-interval smoother at given variances. Entry t of the disturbance
/// vectors is the implied step from t-1 to t (entry 0 is zero).
struct LltSmooth {
  Eigen::MatrixXd states;  // T x 2: level, slope
  Eigen::VectorXd level_disturbance;
  Eigen::VectorXd slope_disturbance;
  double loglik = 0.0;
};

LltSmooth llt_smooth(const Eigen::VectorXd& z, const LltVariances& v);
ScoreSeries llt_scores(const Eigen::VectorXd& psi, int mode = 1);

struct Candidate {
  int time = 0;
  double score = 0.0;
};

/// Strict interior local maxima ranked by score, earlier time first on ties.
std::vector<Candidate> candidate_peaks(const Eigen::VectorXd& scores);

/// One score sequence entering fusion. family 0 = level, 1 = slope.
struct ScoreStream {
  std::string name;
  int family = 0;
  Eigen::VectorXd scores;
};

std::vector<ScoreStream> streams_from(const std::vector<ScoreSeries>& series);

enum class MatchRule { kGreedy, kOptimal };

struct FusionOptions {
  int K = 6;
  int min_separation = 2;
  int tolerance = 2;
  MatchRule matching = MatchRule::kGreedy;
};

struct DetectionMetrics {
  int matched = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> mae;
};

DetectionMetrics evaluate(const std::vector<int>& predicted, const std::vector<int>& truth,
                          int tolerance = 2, MatchRule rule = MatchRule::kGreedy);

struct FusedCandidate {
  int time = 0;
  double score = 0.0;
  std::string stream;
};

struct StreamNomination {
  std::string stream;
  int family = 0;
  double family_median = 0.0;
  std::vector<Candidate> nominated;  // raw scores
};

struct ChangePointReport {
  std::vector<FusedCandidate> fused;
  std::vector<StreamNomination> provenance;
  FusionOptions options;
  bool empty_pool = false;
  std::vector<std::string> warnings;
  std::optional<DetectionMetrics> metrics;

  std::vector<int> times() const;
};

ChangePointReport fuse_topk(const std::vector<ScoreStream>& streams, const FusionOptions& options);

/// Scores every trajectory, fuses, and evaluates against `truth` if given.
ChangePointReport detect_changepoints(const std::vector<Eigen::VectorXd>& trajectories,
                                      const FusionOptions& options,
                                      const std::optional<std::vector<int>>& truth = std::nullopt,
                                      std::vector<ScoreSeries>* scores_out = nullptr);

}  // namespace ment
