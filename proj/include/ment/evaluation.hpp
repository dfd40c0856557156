#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/changepoint.hpp"
#include "ment/model.hpp"
#include "ment/pipeline.hpp"
#include "ment/series.hpp"

namespace ment {

/// Errors for one metric in one trial. Distance errors are Frobenius norms of
/// squared-distance differences; for the original flavor the estimate is
/// first rescaled by the optimal r = <D_hat^2, D^2> / ||D^2||^2.
struct MetricError {
  std::string metric;
  double distance_error_sample = 0.0;      // vs distances of the latent Y
  double distance_error_population = 0.0;  // vs population distances
  double scale = 1.0;                      // r used against the population
  double trajectory_error = 0.0;           // sign-aligned 1D error vs population
};

struct TrialResult {
  std::string preset;
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  int trial = 0;
  EmbeddingFlavor flavor = EmbeddingFlavor::kModified;
  BasisChoice basis = BasisChoice::kCanonical;
  std::vector<MetricError> errors;

  const MetricError& error(const std::string& metric) const;
};

struct RecoveryOptions {
  std::string preset = "dataset1";
  std::vector<Eigen::Index> n_grid{100, 300, 500};
  int trials = 20;
  EmbeddingFlavor flavor = EmbeddingFlavor::kModified;
  BasisChoice basis = BasisChoice::kCanonical;
  std::uint64_t seed = 2024;
  int threads = 1;
};

/// Optimal r > 0 minimising ||est - r ref||_F (0 when ref is zero).
double optimal_scale(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref);

TrialResult run_recovery_trial(const LatentModel& model, Eigen::Index n, std::uint64_t seed,
                               EmbeddingFlavor flavor, BasisChoice basis);
std::vector<TrialResult> run_recovery_study(const RecoveryOptions& options);

/// Median of one metric's trajectory or distance error at one n.
double median_error(const std::vector<TrialResult>& results, Eigen::Index n,
                    const std::string& metric, bool trajectory = true);

struct DetectionTrial {
  int trial = 0;
  std::uint64_t seed = 0;
  int K = 0;
  std::vector<int> predicted;
  DetectionMetrics metrics;
  double seconds = 0.0;
};

struct DetectionSummary {
  int K = 0;
  double mean_f1 = 0.0;
  std::optional<double> mean_mae;  // over trials with at least one match
  int trials = 0;
};

struct DetectionOptions {
  std::string preset = "dataset2";
  Eigen::Index n = 500;
  int trials = 20;
  std::vector<int> K_grid{3, 6, 9};
  FusionOptions fusion;
  std::uint64_t seed = 2024;
  int threads = 1;
};

struct DetectionStudy {
  std::vector<DetectionTrial> trials;
  std::vector<DetectionSummary> summary;
};

/// Sample, embed (modified), mode-wise trajectories, LLT scores, fuse per K.
std::vector<DetectionTrial> run_detection_trial(const LatentModel& model, Eigen::Index n,
                                                std::uint64_t seed, const std::vector<int>& K_grid,
                                                const FusionOptions& fusion, int trial = 0);
DetectionStudy run_detection_study(const DetectionOptions& options);

/// Tidy CSV, one row per trial per metric.
void write_recovery_csv(std::ostream& os, const std::vector<TrialResult>& results);
/// Tidy CSV, one row per trial per K.
void write_detection_csv(std::ostream& os, const DetectionStudy& study);

}  // namespace ment
