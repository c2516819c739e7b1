// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#include <catch2/catch_amalgamated.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "spex/gmrf.hpp"

using namespace spex;

namespace {

Eigen::SparseMatrix<double> random_spd(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = nd(gen);
  const Eigen::MatrixXd q = a * a.transpose() + 0.5 * n * Eigen::MatrixXd::Identity(n, n);
  return q.sparseView();
}

}  // namespace

TEST_CASE("gmrf sampling from the identity precision", "[gmrf]") {
  Eigen::SparseMatrix<double> q(3, 3);
  q.setIdentity();
  Rng rng(123);
  const long n = 100000;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  SparseCholesky chol;
  REQUIRE(chol.factorize(q));
  const Eigen::VectorXd zero;
  for (long k = 0; k < n; ++k) {
    const Eigen::VectorXd x = chol.sample_canonical(zero, rng);
    mean += x;
    cov += x * x.transpose();
  }
  mean /= static_cast<double>(n);
  cov = cov / static_cast<double>(n) - mean * mean.transpose();
  CHECK((cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 0.05);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("gmrf sample moments match the dense inverse", "[gmrf]") {
  const int n = 8;
  const Eigen::SparseMatrix<double> q = random_spd(n, 42);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd(q).inverse();
  Eigen::VectorXd b(n);
  Rng rng(7);
  for (int i = 0; i < n; ++i) b(i) = rng.normal();
  const Eigen::VectorXd target_mean = sigma * b;

  SparseCholesky chol;
  REQUIRE(chol.factorize(q));
  const long draws = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  for (long k = 0; k < draws; ++k) {
    const Eigen::VectorXd x = chol.sample_canonical(b, rng);
    mean += x;
    second += x * x.transpose();
  }
  mean /= static_cast<double>(draws);
  const Eigen::MatrixXd cov = second / static_cast<double>(draws) - mean * mean.transpose();
  // covariance entries within 5% of the diagonal scale
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double scale = std::sqrt(sigma(i, i) * sigma(j, j));
      CHECK(std::fabs(cov(i, j) - sigma(i, j)) < 0.05 * scale);
    }
  // mean within 3 Monte-Carlo standard errors (per coordinate)
  for (int i = 0; i < n; ++i) {
    const double se = std::sqrt(sigma(i, i) / static_cast<double>(draws));
    CHECK(std::fabs(mean(i) - target_mean(i)) < 3.5 * se);
  }
}

TEST_CASE("gmrf sampling is deterministic given the seed", "[gmrf]") {
  const Eigen::SparseMatrix<double> q = random_spd(10, 4242);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
  Rng a(77), c(77);
  const Eigen::VectorXd xa = sample_gmrf(q, b, a);
  const Eigen::VectorXd xc = sample_gmrf(q, b, c);
  CHECK((xa - xc).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gmrf rejects indefinite matrices", "[gmrf]") {
  Eigen::SparseMatrix<double> q(2, 2);
  q.insert(0, 0) = 1.0;
  q.insert(1, 1) = -1.0;
  q.makeCompressed();
  SparseCholesky chol;
  CHECK_FALSE(chol.factorize(q));
  Rng rng(1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(sample_gmrf(q, b, rng), std::runtime_error);
}

TEST_CASE("gaussian log density", "[gmrf]") {
  // standard normal at the mean in 2 dimensions: -log(2 pi)
  Eigen::SparseMatrix<double> eye(2, 2);
  eye.setIdentity();
  const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  CHECK(gaussian_logdensity(eye, zero2, zero2) ==
        Catch::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

  // dense-matrix oracle on random SPD instances
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const int n = 8;
    const Eigen::SparseMatrix<double> q = random_spd(n, seed);
    const Eigen::MatrixXd qd = Eigen::MatrixXd(q);
    std::mt19937_64 gen(seed + 100);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(n), mean(n);
    for (int i = 0; i < n; ++i) {
      x(i) = nd(gen);
      mean(i) = nd(gen);
    }
    const Eigen::VectorXd d = x - mean;
    const double dense = 0.5 * std::log(qd.determinant()) -
                         0.5 * n * std::log(2.0 * std::numbers::pi) -
                         0.5 * d.dot(qd * d);
    CHECK(gaussian_logdensity(q, x, mean) == Catch::Approx(dense).margin(1e-10));
    // translation invariance
    const Eigen::VectorXd shift = Eigen::VectorXd::Constant(n, 3.7);
    CHECK(gaussian_logdensity(q, x + shift, mean + shift) ==
          Catch::Approx(gaussian_logdensity(q, x, mean)).margin(1e-12));
  }
  // dimension mismatch
  const Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(gaussian_logdensity(eye, bad, bad), std::invalid_argument);
}
