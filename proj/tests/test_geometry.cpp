#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ment/errors.hpp"
#include "ment/geometry.hpp"
#include "ment/linalg.hpp"
#include "ment/model.hpp"

using namespace ment;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE("geometry") {
  TEST_CASE("second moment and the three distances") {
    const EmbeddingSeries Y = testing::random_embedding(4, 7, 3, 1);
    CHECK(displacement_second_moment(Y, 2, 2).M.isZero());

    EmbeddingSeries one;
    one.blocks = {MatrixXd::Zero(1, 2), (MatrixXd(1, 2) << 3, 4).finished()};
    const SecondMoment m = displacement_second_moment(one, 1, 0);
    CHECK(m.M == (MatrixXd(2, 2) << 9, 12, 12, 16).finished());
    CHECK(tv_distance(m) == doctest::Approx(5.0));
    CHECK(mv_distance(m) == doctest::Approx(5.0));
    CHECK(tv_distance({MatrixXd::Zero(2, 2), 0, 0}) == 0.0);
    CHECK(mv_distance({MatrixXd::Zero(2, 2), 0, 0}) == 0.0);

    SecondMoment diag{Eigen::Vector2d(4, 1).asDiagonal(), 0, 1};
    CHECK(modewise_distance(diag, Eigen::Vector2d(1, 0)) == doctest::Approx(2.0));
    CHECK(modewise_distance({MatrixXd::Zero(2, 2), 0, 0}, Eigen::Vector2d(0.6, 0.8)) == 0.0);
    CHECK_THROWS_AS(modewise_distance(diag, Eigen::Vector2d(1, 1)), ValidationError);
  }

  TEST_CASE("norm inequalities on random PSD matrices") {
    ment::CounterRng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const int d = 1 + trial % 6;
      const MatrixXd G = testing::gaussian(d, d, rng);
      const MatrixXd M = G * G.transpose();
      const double tv = std::sqrt(tv_distance_squared(M)), mv = std::sqrt(mv_distance_squared(M));
      CHECK(mv <= tv * (1 + 1e-12));
      CHECK(tv <= std::sqrt(double(d)) * mv * (1 + 1e-12));
    }
  }

  TEST_CASE("trace variation splits over any orthonormal basis") {
    ment::CounterRng rng(9);
    const EmbeddingSeries Y = testing::random_embedding(6, 20, 4, 2);
    const MatrixXd Q = testing::random_orthogonal(4, rng);
    for (int t = 0; t < 6; ++t)
      for (int s = 0; s < 6; ++s) {
        const MatrixXd M = displacement_second_moment(Y, t, s).M;
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) sum += modewise_distance_squared(M, Q.col(k));
        CHECK(std::abs(sum - tv_distance_squared(M)) <= 1e-9 * std::max(1.0, tv_distance_squared(M)));
      }
  }

  TEST_CASE("pair sets") {
    CHECK(PairSet::all_pairs(5).size() == 10);
    CHECK(PairSet::adjacent_pairs(5).size() == 4);
    CHECK(PairSet::window_pairs(5, 2).size() == 7);
    CHECK_THROWS_AS(PairSet({{0, 0}}, 3), ValidationError);
    CHECK_THROWS_AS(PairSet({{0, 3}}, 3), ValidationError);
    CHECK_THROWS_AS(PairSet({{1, 0}, {1, 0}}, 3), ValidationError);
  }

  TEST_CASE("aggregated operator eigenvalues are summed mode distances") {
    const EmbeddingSeries Y = testing::random_embedding(7, 25, 3, 4);
    const ModeBasis single = aggregate_operator(Y, PairSet({{3, 1}}, 7));
    const MatrixXd M = displacement_second_moment(Y, 3, 1).M;
    CHECK((single.vectors * single.eigenvalues.asDiagonal() * single.vectors.transpose() - M).norm() < 1e-12);

    for (const PairSet& S : {PairSet::all_pairs(7), PairSet::adjacent_pairs(7), PairSet::window_pairs(7, 3)}) {
      const ModeBasis b = aggregate_operator(Y, S);
      CHECK(orthonormality_defect(b.vectors) < 1e-12);
      for (Eigen::Index k = 0; k < b.d(); ++k) {
        if (k > 0) CHECK(b.eigenvalues(k) <= b.eigenvalues(k - 1));
        double sum = 0.0;
        for (const auto& [t, s] : S.pairs())
          sum += modewise_distance_squared(displacement_second_moment(Y, t, s).M, b.direction(k));
        CHECK(std::abs(b.eigenvalues(k) - sum) <= 1e-9 * std::max(1.0, sum));
      }
    }
  }

  TEST_CASE("latent second moment approaches the closed form") {
    const LatentModel m = dataset1_spec();
    for (Eigen::Index n : {500, 5000}) {
      const EmbeddingSeries Y = sample_latent(m, n, 31).as_embedding();
      for (auto [t, s] : {std::pair{15, 0}, std::pair{9, 7}, std::pair{12, 11}}) {
        const VectorXd dxi = (m.mode_strengths.row(t) - m.mode_strengths.row(s)).transpose();
        MatrixXd closed = MatrixXd::Zero(3, 3);
        for (int k = 0; k < 3; ++k) closed += dxi(k) * dxi(k) / 9.0 * m.mode_basis.col(k) * m.mode_basis.col(k).transpose();
        const MatrixXd Mhat = displacement_second_moment(Y, t, s).M;
        const double rate = std::log(double(n)) / std::sqrt(double(n));
        CHECK(spectral_norm(Mhat - closed) <= rate * spectral_norm(closed));
      }
    }
  }

  TEST_CASE("population aggregated basis is the mode basis") {
    for (const LatentModel& m : {dataset1_spec(), dataset2_spec()}) {
      const EmbeddingSeries Y = testing::population_embedding(m);
      const ModeBasis b = aggregate_operator(Y, PairSet::all_pairs(m.T));
      for (int k = 0; k < m.d; ++k)
        CHECK(std::abs(b.direction(k).dot(m.mode_basis.col(m.mode_to_basis[k]))) >= 0.999);
    }
  }

  TEST_CASE("distance matrices") {
    EmbeddingSeries flat;
    const MatrixXd block = testing::random_embedding(1, 8, 2, 5).blocks[0];
    flat.blocks = {block, block, block};
    const ModeBasis sb = standard_basis(2);
    CHECK(distance_matrix(flat, Metric::tv()).D.isZero());
    CHECK(distance_matrix(flat, Metric::mode_wise(1), &sb).D.isZero());

    const EmbeddingSeries Y = testing::random_embedding(6, 15, 3, 6);
    const ModeBasis b = aggregate_operator(Y, PairSet::all_pairs(6));
    const auto all = all_distance_matrices(Y, b);
    REQUIRE(all.size() == 5);
    const DistanceMatrix tv = distance_matrix(Y, Metric::tv());
    CHECK((all[0].D2 - tv.D2).norm() < 1e-12);
    MatrixXd sum = MatrixXd::Zero(6, 6);
    for (int k = 0; k < 3; ++k) {
      const DistanceMatrix dk = distance_matrix(Y, Metric::mode_wise(k), &b);
      CHECK((all[2 + k].D2 - dk.D2).norm() < 1e-12);
      sum += dk.D2;
    }
    CHECK((sum - tv.D2).cwiseAbs().maxCoeff() <= 1e-9 * tv.D2.maxCoeff());
    CHECK(tv.D.diagonal().isZero());
    CHECK((tv.D - tv.D.transpose()).isZero());
    CHECK_THROWS_AS(distance_matrix(Y, Metric::mode_wise(0)), ValidationError);
    CHECK_THROWS_AS(distance_matrix_from_squared(-MatrixXd::Ones(2, 2) + MatrixXd::Identity(2, 2), Metric::tv()),
                    ValidationError);
  }

  TEST_CASE("metric tags") {
    for (const Metric& m : {Metric::tv(), Metric::mv(), Metric::mode_wise(0), Metric::mode_wise(4)})
      CHECK(parse_metric(to_string(m)) == m);
    CHECK(to_string(Metric::mode_wise(0)) == "mode1");
    CHECK_THROWS_AS(parse_metric("mode0"), ValidationError);
    CHECK_THROWS_AS(parse_metric("xx"), ValidationError);
  }
}
