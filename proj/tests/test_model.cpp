#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ment/errors.hpp"
#include "ment/geometry.hpp"
#include "ment/linalg.hpp"
#include "ment/model.hpp"
#include "ment/trajectory.hpp"

using namespace ment;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LatentModel two_time_model(const VectorXd& xi_t, const VectorXd& xi_s) {
  LatentModel m = dataset1_spec();
  m.name = "two_time";
  m.T = 2;
  m.mode_strengths.resize(2, 3);
  m.mode_strengths.row(0) = xi_t.transpose();
  m.mode_strengths.row(1) = xi_s.transpose();
  m.planted.clear();
  return m;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("block matrix from mode strengths") {
    const MatrixXd U = three_community_basis();
    CHECK(orthonormality_defect(U) < 1e-14);
    CHECK(build_block_matrix(VectorXd::Zero(3), U).cwiseAbs().maxCoeff() == 0.0);

    const MatrixXd B1 = build_block_matrix(Eigen::Vector3d(1, 0, 0), U);
    CHECK((B1.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);

    const MatrixXd B = build_block_matrix(Eigen::Vector3d(0.9, 0.3, 0.2), U);
    const SymmetricEigen eig = symmetric_eigen_desc(B);
    CHECK(eig.values(0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(eig.values(1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(eig.values(2) == doctest::Approx(0.2).epsilon(1e-14));

    MatrixXd bad = U;
    bad(0, 0) += 1e-6;
    CHECK_THROWS_AS(build_block_matrix(Eigen::Vector3d(1, 0, 0), bad), ValidationError);
  }

  TEST_CASE("presets") {
    const LatentModel d1 = dataset1_spec();
    CHECK(d1.T == 16);
    CHECK(d1.d == 3);
    CHECK(d1.change_times() == std::vector<int>{4, 9, 13});
    const LatentModel d2 = dataset2_spec();
    CHECK(d2.T == 70);
    CHECK(d2.change_times() == std::vector<int>{11, 21, 31, 41, 51, 61});
    CHECK(d2.mode_to_basis == std::vector<int>{2, 1, 0});
    for (const LatentModel* m : {&d1, &d2}) {
      CHECK_NOTHROW(m->validate());
      CHECK(m->is_isotropic());
      // Exhaustive scan of block entries: all are edge probabilities here.
      for (int t = 0; t < m->T; ++t) {
        const MatrixXd P = 3.0 * m->block_scale * m->block_matrix(t);
        CHECK(P.minCoeff() >= 0.0);
        CHECK(P.maxCoeff() <= 1.0);
      }
      CHECK(population_mode_basis(*m).warnings.empty());
    }
    CHECK_THROWS_AS(preset_by_name("dataset3"), ValidationError);
  }

  TEST_CASE("validate names the offending entry") {
    LatentModel m = dataset1_spec();
    m.mode_strengths(5, 0) = 5.0;
    try {
      m.validate();
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("t=6") != std::string::npos);
    }
  }

  TEST_CASE("sampling") {
    SUBCASE("zero strengths give empty graphs") {
      LatentModel m = dataset1_spec();
      m.mode_strengths.setZero();
      const SampledNetwork net = sample_dynamic_sbm(m, 40, 3);
      for (const auto& A : net.snapshots.adjacency) CHECK(A.sum() == 0.0);
      CHECK(net.latent.probability(0).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("all-1/3 block gives P = 1/3") {
      LatentModel m = dataset1_spec();
      for (int t = 0; t < m.T; ++t) m.mode_strengths.row(t) << 1.0, 0.0, 0.0;
      const SampledNetwork net = sample_dynamic_sbm(m, 3, 11);
      for (int t = 0; t < m.T; ++t)
        CHECK((net.latent.probability(t).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-14);
    }
    SUBCASE("deterministic in the seed") {
      const LatentModel m = dataset1_spec();
      const SampledNetwork a = sample_dynamic_sbm(m, 60, 5);
      const SampledNetwork b = sample_dynamic_sbm(m, 60, 5);
      const SampledNetwork c = sample_dynamic_sbm(m, 60, 6);
      bool differs = false;
      for (int t = 0; t < m.T; ++t) {
        CHECK(a.snapshots.adjacency[t] == b.snapshots.adjacency[t]);
        differs |= a.snapshots.adjacency[t] != c.snapshots.adjacency[t];
      }
      CHECK(differs);
      CHECK_NOTHROW(a.snapshots.validate());
    }
    SUBCASE("block densities concentrate") {
      const LatentModel d1 = dataset1_spec();
      const LatentModel m = two_time_model(d1.mode_strengths.row(0).transpose(), d1.mode_strengths.row(1).transpose());
      const Eigen::Index n = 2000;
      const SampledNetwork net = sample_dynamic_sbm(m, n, 17);
      const MatrixXd B = 3.0 * m.block_scale * m.block_matrix(0);
      const MatrixXd& A = net.snapshots.adjacency[0];
      MatrixXd edges = MatrixXd::Zero(3, 3), pairs = MatrixXd::Zero(3, 3);
      for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) {
          const int a = net.latent.community[i], b = net.latent.community[j];
          const int lo = std::min(a, b), hi = std::max(a, b);
          edges(lo, hi) += A(i, j);
          pairs(lo, hi) += 1.0;
        }
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
          const double p = B(a, b);
          const double se = std::sqrt(p * (1 - p) / pairs(a, b));
          CHECK(std::abs(edges(a, b) / pairs(a, b) - p) <= 3 * se);
        }
    }
  }

  TEST_CASE("anchor isotropy concentrates at the n^{-1/2} log n rate") {
    const LatentModel m = dataset1_spec();
    auto dev = [&](Eigen::Index n) {
      double total = 0.0;
      for (std::uint64_t s = 0; s < 20; ++s) {
        LatentModel z = m;
        z.mode_strengths.setZero();
        const MatrixXd X = sample_latent(z, n, 100 + s).X;
        total += spectral_norm(X.transpose() * X / double(n) - MatrixXd::Identity(3, 3));
      }
      return total / 20;
    };
    auto rate = [](double n) { return std::log(n) / std::sqrt(n); };
    const double C = dev(500) / rate(500);
    CHECK(dev(20000) <= C * rate(20000));
  }

  TEST_CASE("non-isotropic anchors are whitened") {
    LatentModel m = dataset1_spec();
    m.mode_strengths.setConstant(0.1);
    AnchorDistribution a;
    a.name = "unequal";
    const std::vector<double> w{0.5, 0.3, 0.2};
    a.second_moment = MatrixXd::Zero(3, 3);
    for (int k = 0; k < 3; ++k) {
      VectorXd e = VectorXd::Zero(3);
      e(k) = std::sqrt(3.0);
      a.atoms.push_back(e);
      a.weights.push_back(w[k]);
      a.second_moment += w[k] * e * e.transpose();
    }
    m.anchor = a;
    CHECK_FALSE(m.is_isotropic());
    const MatrixXd G = m.whitening();
    CHECK((G * a.second_moment * G - MatrixXd::Identity(3, 3)).norm() < 1e-12);
    const LatentSample lat = sample_latent(m, 20000, 8);
    const MatrixXd S = lat.X.transpose() * lat.X / 20000.0;
    CHECK((S - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);
    // Edge probabilities do not depend on the coordinates.
    const SampledNetwork net = sample_dynamic_sbm(m, 50, 8);
    const MatrixXd P = net.latent.probability(0);
    const MatrixXd B = m.block_scale * m.block_matrix(0);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const VectorXd ci = a.atoms[net.latent.community[i]], cj = a.atoms[net.latent.community[j]];
        CHECK(P(i, j) == doctest::Approx(ci.dot(B * cj)).epsilon(1e-12));
      }
  }

  TEST_CASE("population distances in closed form") {
    const LatentModel m = two_time_model(Eigen::Vector3d(0.6, 0.2, 0.1), Eigen::Vector3d(0.3, 0.2, 0.1));
    const DistanceMatrix D1 = population_distance_matrix(m, Metric::mode_wise(0));
    CHECK(D1.D(0, 1) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(population_distance_matrix(m, Metric::mode_wise(1)).D(0, 1) == doctest::Approx(0.0));
    CHECK(population_distance_matrix(m, Metric::tv()).D(0, 1) == doctest::Approx(0.1));
    CHECK(population_distance_matrix(m, Metric::mv()).D(0, 1) == doctest::Approx(0.1));

    const LatentModel d1 = dataset1_spec();
    const DistanceMatrix tv = population_distance_matrix(d1, Metric::tv());
    const DistanceMatrix mv = population_distance_matrix(d1, Metric::mv());
    for (int t = 0; t < d1.T; ++t) {
      CHECK(tv.D(t, t) == 0.0);
      for (int s = 0; s < d1.T; ++s) {
        const VectorXd dxi = (d1.mode_strengths.row(t) - d1.mode_strengths.row(s)).transpose();
        CHECK(tv.D2(t, s) == doctest::Approx(dxi.squaredNorm() / 9.0).epsilon(1e-12));
        CHECK(mv.D(t, s) == doctest::Approx(dxi.cwiseAbs().maxCoeff() / 3.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("population mode trajectory is the centered strength curve") {
    for (const LatentModel& m : {dataset1_spec(), dataset2_spec()})
      for (int k = 0; k < m.d; ++k) {
        const Trajectory tr = cmds(population_distance_matrix(m, Metric::mode_wise(k)), 1);
        VectorXd xi = m.mode_strengths.col(m.mode_to_basis[k]) / double(m.d);
        xi.array() -= xi.mean();
        const double err = std::min((tr.coords.col(0) - xi).norm(), (tr.coords.col(0) + xi).norm());
        CHECK(err < 1e-10);
      }
  }

  TEST_CASE("Monte Carlo agrees with the closed form") {
    const LatentModel m = dataset1_spec();
    const MonteCarloEstimate e = monte_carlo_squared_distance(m, 2, 12, std::nullopt, 200000, 4);
    const double exact = population_distance_matrix(m, Metric::tv()).D2(2, 12);
    CHECK(std::abs(e.mean - exact) <= 4 * e.standard_error + 1e-15);
    CHECK_THROWS_AS(monte_carlo_squared_distance(m, 0, 1, VectorXd::Ones(3), 10, 1), ValidationError);
  }
}
