#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ment/attribution.hpp"
#include "ment/changepoint.hpp"
#include "ment/geometry.hpp"
#include "ment/model.hpp"
#include "ment/series.hpp"
#include "ment/trajectory.hpp"

namespace ment {

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& path);

struct IngestResult {
  SnapshotSeries series;
  int self_loops_dropped = 0;
  int duplicate_edges = 0;
  std::vector<std::string> warnings;
};

/// Lines "t u v" with 1-based t and external labels u, v. Blank lines and
/// lines starting with '#' are skipped. With T = 0 the snapshot count is the
/// largest t seen. The manifest (one label per line) fixes the first indices
/// and admits isolated nodes; other labels follow in order of appearance.
IngestResult ingest_edge_triples(const std::filesystem::path& path,
                                 const std::filesystem::path& manifest = {}, int T = 0);
/// A directory of edge-list files "u v" whose stems are the 1-based times.
IngestResult ingest_snapshot_files(const std::filesystem::path& dir,
                                   const std::filesystem::path& manifest = {}, int T = 0);
void export_edge_triples(std::ostream& os, const SnapshotSeries& series);
void export_manifest(std::ostream& os, const SnapshotSeries& series);

void write_embedding_csv(std::ostream& os, const EmbeddingSeries& Y,
                         const std::vector<std::string>& node_ids);
EmbeddingSeries read_embedding_csv(std::istream& is, std::vector<std::string>* node_ids = nullptr);
/// Little-endian doubles after a small header, followed by the SHA-256 of
/// everything before it.
void write_embedding_binary(const std::filesystem::path& path, const EmbeddingSeries& Y);
EmbeddingSeries read_embedding_binary(const std::filesystem::path& path);

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& M, const std::string& tag);
Eigen::MatrixXd read_matrix_csv(std::istream& is);

/// Rows t = 1..T, columns dim_1..dim_c.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
Eigen::MatrixXd read_trajectory_csv(std::istream& is);
std::string trajectory_sidecar_json(const Trajectory& tr, const std::string& config_hash);
std::string distance_sidecar_json(const DistanceMatrix& D, const std::string& config_hash);

std::string attribution_json(const AttributionTable& table, const TopKReport& top,
                             const std::string& config_hash);
void write_attribution_csv(std::ostream& os, const AttributionTable& table);

std::string changepoint_json(const ChangePointReport& report, const std::vector<ScoreSeries>& scores,
                             const std::string& config_hash);
void write_scores_csv(std::ostream& os, const std::vector<ScoreSeries>& scores);

std::string preset_json(const LatentModel& model);

/// Reads a whole file; throws ValidationError naming the path if missing.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ment
