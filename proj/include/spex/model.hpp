// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spex/fem.hpp"
#include "spex/projection.hpp"
#include "spex/spde.hpp"

namespace spex {

// Fixed prior constants. The lognormal pairs are (mean, sd) of the
// log-scale normal; the sources list the sd values unsquared.
struct PriorConstants {
  double kappa_beta_mu = 0.0025;
  double kappa_beta_tau = 0.25;
  double kappa_xi = 2.0;
  double m_kappa_u_mu = -2.7, s_kappa_u_mu = 0.45;
  double m_kappa_u_tau = -2.5, s_kappa_u_tau = 0.45;
  double m_omega_u_mu = -1.1, s_omega_u_mu = 0.1;
  double m_omega_u_tau = 1.8, s_omega_u_tau = 0.1;
  double m_kappa_v_mu = -4.5, s_kappa_v_mu = 0.45;
  double m_kappa_v_tau = 1.5, s_kappa_v_tau = 0.1;
};

// Hyperparameters theta = (kappa_umu, omega_umu, kappa_utau, omega_utau,
// kappa_vmu, kappa_vtau), all strictly positive.
struct HyperState {
  double kappa_u_mu = 1.0;
  double omega_u_mu = 1.0;
  double kappa_u_tau = 1.0;
  double omega_u_tau = 1.0;
  double kappa_v_mu = 1.0;
  double kappa_v_tau = 1.0;

  static constexpr int size() { return 6; }

  Eigen::Matrix<double, 6, 1> to_vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << kappa_u_mu, omega_u_mu, kappa_u_tau, omega_u_tau, kappa_v_mu, kappa_v_tau;
    return v;
  }

  static HyperState from_vector(const Eigen::Matrix<double, 6, 1>& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5)};
  }

  bool positive() const { return (to_vector().array() > 0.0).all(); }

  static HyperState prior_median(const PriorConstants& c) {
    return {std::exp(c.m_kappa_u_mu), std::exp(c.m_omega_u_mu), std::exp(c.m_kappa_u_tau),
            std::exp(c.m_omega_u_tau), std::exp(c.m_kappa_v_mu), std::exp(c.m_kappa_v_tau)};
  }
};

// Split latent vector x = (eta, nu) = (mu, tau, xi, beta_mu, u_mu, beta_tau, u_tau).
struct LatentState {
  Eigen::VectorXd mu;
  Eigen::VectorXd tau;
  double xi = 0.0;
  Eigen::Vector2d beta_mu = Eigen::Vector2d::Zero();
  Eigen::VectorXd u_mu;
  Eigen::Vector2d beta_tau = Eigen::Vector2d::Zero();
  Eigen::VectorXd u_tau;

  Eigen::VectorXd eta_vector() const {
    const auto j = mu.size();
    Eigen::VectorXd eta(2 * j + 1);
    eta.head(j) = mu;
    eta.segment(j, j) = tau;
    eta(2 * j) = xi;
    return eta;
  }

  Eigen::VectorXd nu_vector() const {
    const auto n = u_mu.size();
    Eigen::VectorXd nu(2 * n + 4);
    nu.segment(0, 2) = beta_mu;
    nu.segment(2, n) = u_mu;
    nu.segment(2 + n, 2) = beta_tau;
    nu.segment(4 + n, n) = u_tau;
    return nu;
  }

  void set_nu(const Eigen::VectorXd& nu) {
    const auto n = u_mu.size();
    if (nu.size() != 2 * n + 4)
      throw std::invalid_argument("LatentState::set_nu: dimension mismatch");
    beta_mu = nu.segment(0, 2);
    u_mu = nu.segment(2, n);
    beta_tau = nu.segment(2 + n, 2);
    u_tau = nu.segment(4 + n, n);
  }
};

// Immutable model description shared across chains.
struct ModelSpec {
  int n_sites = 0;
  int n_nodes = 0;
  Eigen::MatrixX2d x_mu;            // J x 2 design for the location parameter
  Eigen::MatrixX2d x_tau;           // J x 2 design for the log-scale parameter
  Eigen::SparseMatrix<double> a_s;  // J x n barycentric projection onto the sites
  FemMatrices fem;
  PriorConstants prior;

  void validate() const {
    if (n_sites <= 0 || n_nodes <= 0) throw std::invalid_argument("ModelSpec: empty model");
    if (x_mu.rows() != n_sites || x_tau.rows() != n_sites)
      throw std::invalid_argument("ModelSpec: design matrix rows != n_sites");
    if (a_s.rows() != n_sites || a_s.cols() != n_nodes)
      throw std::invalid_argument("ModelSpec: projection shape mismatch");
    if (fem.mass_lumped.size() != n_nodes)
      throw std::invalid_argument("ModelSpec: FEM matrices do not match the mesh");
  }

  int eta_dim() const { return 2 * n_sites + 1; }
  int nu_dim() const { return 2 * n_nodes + 4; }
};

// Z maps nu to the mean of eta: rows (mu | tau | xi) by columns
// (beta_mu | u_mu | beta_tau | u_tau); the xi row is zero.
inline Eigen::SparseMatrix<double> build_Z(const ModelSpec& spec) {
  spec.validate();
  const int j = spec.n_sites, n = spec.n_nodes;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(j) * 10);
  for (int i = 0; i < j; ++i) {
    trips.emplace_back(i, 0, spec.x_mu(i, 0));
    trips.emplace_back(i, 1, spec.x_mu(i, 1));
    trips.emplace_back(j + i, 2 + n, spec.x_tau(i, 0));
    trips.emplace_back(j + i, 3 + n, spec.x_tau(i, 1));
  }
  for (int k = 0; k < spec.a_s.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(spec.a_s, k); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), 2 + static_cast<int>(it.col()),
                         it.value());
      trips.emplace_back(j + static_cast<int>(it.row()), 4 + n + static_cast<int>(it.col()),
                         it.value());
    }
  Eigen::SparseMatrix<double> z(2 * j + 1, 2 * n + 4);
  z.setFromTriplets(trips.begin(), trips.end());
  z.makeCompressed();
  return z;
}

// Diagonal of Q_eps: (kappa_vmu x J, kappa_vtau x J, kappa_xi).
inline Eigen::VectorXd build_Qeps_diagonal(const ModelSpec& spec, const HyperState& h) {
  if (!(h.kappa_v_mu > 0.0) || !(h.kappa_v_tau > 0.0) || !(spec.prior.kappa_xi > 0.0))
    throw std::domain_error("build_Qeps: nonpositive precision");
  const int j = spec.n_sites;
  Eigen::VectorXd d(2 * j + 1);
  d.head(j).setConstant(h.kappa_v_mu);
  d.segment(j, j).setConstant(h.kappa_v_tau);
  d(2 * j) = spec.prior.kappa_xi;
  return d;
}

// Block diagonal Q_nu = diag(kappa_bmu I2, Q_umu, kappa_btau I2, Q_utau).
inline Eigen::SparseMatrix<double> build_Qnu(const ModelSpec& spec, const HyperState& h) {
  const int n = spec.n_nodes;
  const Eigen::SparseMatrix<double> q_u_mu =
      spde_precision(spec.fem, {h.kappa_u_mu, h.omega_u_mu});
  const Eigen::SparseMatrix<double> q_u_tau =
      spde_precision(spec.fem, {h.kappa_u_tau, h.omega_u_tau});
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(q_u_mu.nonZeros() + q_u_tau.nonZeros()) + 4);
  trips.emplace_back(0, 0, spec.prior.kappa_beta_mu);
  trips.emplace_back(1, 1, spec.prior.kappa_beta_mu);
  trips.emplace_back(2 + n, 2 + n, spec.prior.kappa_beta_tau);
  trips.emplace_back(3 + n, 3 + n, spec.prior.kappa_beta_tau);
  for (int k = 0; k < q_u_mu.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(q_u_mu, k); it; ++it)
      trips.emplace_back(2 + static_cast<int>(it.row()), 2 + static_cast<int>(it.col()),
                         it.value());
  for (int k = 0; k < q_u_tau.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(q_u_tau, k); it; ++it)
      trips.emplace_back(4 + n + static_cast<int>(it.row()),
                         4 + n + static_cast<int>(it.col()), it.value());
  Eigen::SparseMatrix<double> q(2 * n + 4, 2 * n + 4);
  q.setFromTriplets(trips.begin(), trips.end());
  q.makeCompressed();
  return q;
}

// Joint precision of x = (eta, nu) given theta:
//   [ Q_eps, -Q_eps Z; -Z^T Q_eps, Q_nu + Z^T Q_eps Z ].
inline Eigen::SparseMatrix<double> joint_precision(const ModelSpec& spec, const HyperState& h) {
  const Eigen::SparseMatrix<double> z = build_Z(spec);
  const Eigen::VectorXd qeps = build_Qeps_diagonal(spec, h);
  const Eigen::SparseMatrix<double> q_nu = build_Qnu(spec, h);
  const int ne = spec.eta_dim(), nn = spec.nu_dim();
  const Eigen::SparseMatrix<double> qez = qeps.asDiagonal() * z;
  Eigen::SparseMatrix<double> ztqz = z.transpose() * qez;
  // exact symmetry of the stored values (product round-off)
  const Eigen::SparseMatrix<double> ztqz_t = ztqz.transpose();
  ztqz = 0.5 * (ztqz + ztqz_t);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(ne + 2 * qez.nonZeros() + ztqz.nonZeros() +
                                         q_nu.nonZeros()));
  for (int i = 0; i < ne; ++i) trips.emplace_back(i, i, qeps(i));
  for (int k = 0; k < qez.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(qez, k); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), ne + static_cast<int>(it.col()),
                         -it.value());
      trips.emplace_back(ne + static_cast<int>(it.col()), static_cast<int>(it.row()),
                         -it.value());
    }
  for (int k = 0; k < ztqz.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(ztqz, k); it; ++it)
      trips.emplace_back(ne + static_cast<int>(it.row()), ne + static_cast<int>(it.col()),
                         it.value());
  for (int k = 0; k < q_nu.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(q_nu, k); it; ++it)
      trips.emplace_back(ne + static_cast<int>(it.row()), ne + static_cast<int>(it.col()),
                         it.value());
  Eigen::SparseMatrix<double> q(ne + nn, ne + nn);
  q.setFromTriplets(trips.begin(), trips.end());
  q.makeCompressed();
  return q;
}

inline double lognormal_logpdf(double x, double m, double s) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  const double d = (std::log(x) - m) / s;
  return -std::log(x) - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * d * d;
}

// Sum of the six independent lognormal hyperprior log-densities.
inline double log_hyperprior(const HyperState& h, const PriorConstants& c) {
  if (!h.positive()) return -std::numeric_limits<double>::infinity();
  return lognormal_logpdf(h.kappa_u_mu, c.m_kappa_u_mu, c.s_kappa_u_mu) +
         lognormal_logpdf(h.omega_u_mu, c.m_omega_u_mu, c.s_omega_u_mu) +
         lognormal_logpdf(h.kappa_u_tau, c.m_kappa_u_tau, c.s_kappa_u_tau) +
         lognormal_logpdf(h.omega_u_tau, c.m_omega_u_tau, c.s_omega_u_tau) +
         lognormal_logpdf(h.kappa_v_mu, c.m_kappa_v_mu, c.s_kappa_v_mu) +
         lognormal_logpdf(h.kappa_v_tau, c.m_kappa_v_tau, c.s_kappa_v_tau);
}

}  // namespace spex
