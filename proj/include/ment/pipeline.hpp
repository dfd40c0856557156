#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/changepoint.hpp"
#include "ment/geometry.hpp"
#include "ment/series.hpp"
#include "ment/trajectory.hpp"

namespace ment {

enum class BasisChoice { kCanonical, kStandard };

const char* to_string(BasisChoice b);
BasisChoice parse_basis_choice(const std::string& tag);

/// Distances and trajectories for TV, MV and every mode of one embedding.
struct Analysis {
  ModeBasis basis;
  std::vector<DistanceMatrix> distances;  // tv, mv, mode1..mode_d
  std::vector<Trajectory> trajectories;   // same order

  const DistanceMatrix& distance(const Metric& m) const;
  const Trajectory& trajectory(const Metric& m) const;
  /// First CMDS coordinate of every mode-wise trajectory.
  std::vector<Eigen::VectorXd> mode_curves() const;
};

Analysis analyze_embedding(const EmbeddingSeries& Y, const PairSet& pairs, Eigen::Index c,
                           BasisChoice basis = BasisChoice::kCanonical);

/// Every knob a run depends on. Serialised into each output bundle.
struct PipelineConfig {
  std::string preset;             // synthetic source, empty for ingested data
  std::string input;              // ingested edge file or directory
  std::string input_format = "edge-triples";
  std::string manifest;           // optional node manifest
  int T = 0;                      // snapshot count for ingested data (0: infer)
  Eigen::Index n = 500;
  Eigen::Index d = 3;
  Eigen::Index c = 1;
  std::string flavor = "modified";
  std::string basis = "canonical";
  std::string pairs = "all";      // all | adjacent | window:W
  std::vector<std::string> metrics{"tv", "mv", "mode1", "mode2", "mode3"};
  int K = 6;
  int min_separation = 2;
  int tolerance = 2;
  std::string matching = "greedy";
  std::string attribution_pairs = "adjacent";  // pairs (cp, cp-1) around detections
  int top_k = 10;
  std::uint64_t seed = 7;
  std::string output = "ment_out";  // not serialized: bundles are relocatable

  void validate() const;
  /// First 16 hex digits of the SHA-256 of the canonical JSON dump.
  std::string hash() const;
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  PairSet pair_set(Eigen::Index T) const;
  FusionOptions fusion() const;
};

/// Number of worker threads from MENT_THREADS (default 1).
int thread_count();

}  // namespace ment
