#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "ment/model.hpp"
#include "ment/rng.hpp"
#include "ment/series.hpp"

namespace testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, ment::CounterRng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

inline ment::EmbeddingSeries random_embedding(Eigen::Index T, Eigen::Index n, Eigen::Index d,
                                              std::uint64_t seed) {
  ment::CounterRng rng(seed);
  ment::EmbeddingSeries Y;
  for (Eigen::Index t = 0; t < T; ++t) Y.blocks.push_back(gaussian(n, d, rng));
  return Y;
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index d, ment::CounterRng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(d, d, rng));
  Eigen::MatrixXd Q = qr.householderQ();
  return Q;
}

// Exact population embedding: one node per community, so (1/n) X^T X = I.
inline ment::EmbeddingSeries population_embedding(const ment::LatentModel& m) {
  const Eigen::MatrixXd X = std::sqrt(double(m.d)) * Eigen::MatrixXd::Identity(m.d, m.d);
  ment::EmbeddingSeries Y;
  Y.flavor = ment::EmbeddingFlavor::kLatent;
  for (int t = 0; t < m.T; ++t) Y.blocks.push_back(X * (m.block_scale * m.block_matrix(t)));
  return Y;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing
