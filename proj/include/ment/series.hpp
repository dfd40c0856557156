#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ment {

/// T symmetric, binary, hollow adjacency matrices over one shared node set.
/// Time indices into `adjacency` are 0-based.
struct SnapshotSeries {
  Eigen::Index n = 0;
  std::vector<Eigen::MatrixXd> adjacency;
  std::vector<std::string> node_ids;  // index -> external label

  Eigen::Index T() const { return static_cast<Eigen::Index>(adjacency.size()); }

  /// Throws ValidationError unless every snapshot is n x n, symmetric,
  /// binary and has a zero diagonal, and node_ids has n entries.
  void validate() const;
};

/// Builds labels "0", "1", ... for synthetic series.
std::vector<std::string> default_node_ids(Eigen::Index n);

enum class EmbeddingFlavor { kOriginal, kModified, kLatent };

const char* to_string(EmbeddingFlavor flavor);

/// Per-time n x d node embeddings sharing one coordinate system.
struct EmbeddingSeries {
  std::vector<Eigen::MatrixXd> blocks;
  EmbeddingFlavor flavor = EmbeddingFlavor::kModified;

  Eigen::Index T() const { return static_cast<Eigen::Index>(blocks.size()); }
  Eigen::Index n() const { return blocks.empty() ? 0 : blocks.front().rows(); }
  Eigen::Index d() const { return blocks.empty() ? 0 : blocks.front().cols(); }

  void validate() const;
  /// Right-multiplies every block by `transform` (shared d x d).
  EmbeddingSeries transformed(const Eigen::MatrixXd& transform) const;
};

}  // namespace ment
