#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ment/attribution.hpp"
#include "ment/embedding.hpp"
#include "ment/errors.hpp"
#include "ment/model.hpp"
#include "ment/pipeline.hpp"

using namespace ment;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE("attribution") {
  TEST_CASE("displacements") {
    const EmbeddingSeries Y = testing::random_embedding(3, 9, 2, 1);
    CHECK(node_displacements(Y, 1, 1).isZero());
    EmbeddingSeries single;
    single.blocks = {(MatrixXd(1, 2) << 1, 2).finished(), (MatrixXd(1, 2) << 4, 6).finished()};
    CHECK(node_displacements(single, 1, 0) == (MatrixXd(1, 2) << 3, 4).finished());
    const MatrixXd delta = node_displacements(Y, 2, 0);
    CHECK(delta.squaredNorm() / 9 == doctest::Approx(displacement_second_moment(Y, 2, 0).M.trace()));
    CHECK_THROWS_AS(node_displacements(Y, 0, 3), ValidationError);
  }

  TEST_CASE("per-node tables sum to the distance") {
    const EmbeddingSeries Y = testing::random_embedding(5, 30, 4, 2);
    const ModeBasis b = aggregate_operator(Y, PairSet::all_pairs(5));
    const MatrixXd M = displacement_second_moment(Y, 4, 1).M;
    const AttributionTable tv = attribute(Y, 4, 1, Metric::tv());
    CHECK(std::abs(tv.total() - tv_distance_squared(M)) <= 1e-9 * tv_distance_squared(M));
    CHECK(tv.values.minCoeff() >= 0.0);
    double modes = 0.0;
    for (int k = 0; k < 4; ++k) {
      const AttributionTable tk = attribute(Y, 4, 1, Metric::mode_wise(k), &b);
      CHECK(tk.is_signed());
      CHECK(std::abs(tk.total() - modewise_distance_squared(M, b.direction(k))) <= 1e-9 * tv.total());
      modes += tk.values.squaredNorm();
    }
    // Mode completeness: node by node the mode squares add up to the TV share.
    CHECK(std::abs(modes - tv.total()) <= 1e-9 * tv.total());
    CHECK_THROWS_AS(attribute(Y, 4, 1, Metric::mv()), ValidationError);
    CHECK_THROWS_AS(attribute(Y, 4, 1, Metric::mode_wise(0)), ValidationError);
    CHECK_THROWS_AS(attribute(Y, 4, 1, Metric::tv(), nullptr, {"a"}), ValidationError);
  }

  TEST_CASE("uniform displacement gives a uniform table") {
    EmbeddingSeries Y;
    const MatrixXd base = testing::random_embedding(1, 6, 2, 3).blocks[0];
    Y.blocks = {base, base.rowwise() + Eigen::RowVector2d(0.3, -0.4)};
    const AttributionTable tab = attribute(Y, 1, 0, Metric::tv());
    for (int i = 0; i < 6; ++i) CHECK(tab.values(i) == doctest::Approx(0.25 / 6));
  }

  TEST_CASE("top-K report") {
    AttributionTable tab;
    tab.metric = Metric::mode_wise(0);
    tab.values = VectorXd::Ones(5);
    tab.node_ids = default_node_ids(5);
    CHECK(top_k_report(tab, 0).positive.empty());
    const TopKReport ties = top_k_report(tab, 3);
    CHECK(ties.positive[0].node == 0);
    CHECK(ties.positive[2].node == 2);
    CHECK(ties.negative[0].node == 0);

    EmbeddingSeries Y = testing::random_embedding(2, 40, 3, 4);
    Y.blocks[1] = Y.blocks[0] + 0.01 * testing::random_embedding(1, 40, 3, 5).blocks[0];
    Y.blocks[1].row(17) += Eigen::RowVector3d(2, -1, 1);
    const TopKReport planted = top_k_report(attribute(Y, 1, 0, Metric::tv()), 3);
    CHECK(planted.positive[0].node == 17);
    CHECK(planted.positive[0].id == "17");
    CHECK_THROWS_AS(top_k_report(tab, -1), ValidationError);
  }

  TEST_CASE("mode 2 signs separate community 3 on Dataset 1") {
    const LatentModel m = dataset1_spec();
    const SampledNetwork net = sample_dynamic_sbm(m, 500, 31);
    const EmbeddingSeries Y = embed(net.snapshots, 3, EmbeddingFlavor::kModified);
    const ModeBasis b = aggregate_operator(Y, PairSet::all_pairs(m.T));
    // Mode 2 jumps at t = 9: pair (9, 8), 0-based (8, 7).
    const AttributionTable tab = attribute(Y, 8, 7, Metric::mode_wise(1), &b);
    double majority[3];
    for (int c = 0; c < 3; ++c) {
      int pos = 0, total = 0;
      for (int i = 0; i < 500; ++i)
        if (net.latent.community[i] == c) {
          ++total;
          pos += tab.values(i) > 0;
        }
      const double share = double(std::max(pos, total - pos)) / total;
      CHECK(share >= 0.95);
      majority[c] = 2 * pos > total ? 1.0 : -1.0;
    }
    CHECK(majority[0] == majority[1]);
    CHECK(majority[2] == -majority[0]);
  }

  TEST_CASE("node-to-trajectory bounds") {
    const EmbeddingSeries R = testing::random_embedding(6, 12, 3, 8);
    const ModeBasis rb = aggregate_operator(R, PairSet::all_pairs(6));
    const DistanceMatrix D = distance_matrix(R, Metric::tv());
    // Full rank: nothing is left in the tail, so the identity is exact.
    const Trajectory full = cmds(D, 5);
    const BoundReport exact = pairwise_bound_check(full, R, Metric::tv());
    CHECK(exact.tail_energy < 1e-20);
    CHECK(exact.max_residual < 1e-8);
    CHECK_THROWS_AS(pairwise_bound_check(full, R, Metric::mv()), ValidationError);
    for (int c = 1; c <= 3; ++c) {
      const BoundReport r = pairwise_bound_check(cmds(distance_matrix(R, Metric::mode_wise(0), &rb), c), R,
                                                 Metric::mode_wise(0), &rb);
      CHECK(r.pairwise_holds);
      CHECK(r.aggregated_holds);
    }

    const LatentModel m = dataset1_spec();
    const SampledNetwork net = sample_dynamic_sbm(m, 500, 2);
    const EmbeddingSeries Y = embed(net.snapshots, 3, EmbeddingFlavor::kModified);
    const BoundReport rep = pairwise_bound_check(cmds(distance_matrix(Y, Metric::tv()), 1), Y, Metric::tv());
    CHECK(rep.pairs.size() == 120);
    CHECK(rep.pairwise_holds);
    CHECK(rep.aggregated_holds);
    const MvSandwichReport mv = mv_sandwich_check(cmds(distance_matrix(Y, Metric::mv()), 1), Y);
    CHECK(mv.bracket_holds);
  }
}
