// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spex/gev.hpp"
#include "spex/gmrf.hpp"
#include "spex/model.hpp"
#include "spex/observations.hpp"
#include "spex/rng.hpp"

namespace spex {

struct SamplerConfig {
  long n_iter = 1000;
  long n_burnin = 0;
  int n_chains = 4;
  std::uint64_t seed = 1;
  double scale_bound = 1.3;  // F in the multiplicative hyperparameter proposal
  double newton_tol = 1e-8;
  int newton_max_steps = 50;
  int thin = 1;
  int threads = 0;  // 0 = one thread per chain

  void validate() const {
    if (n_iter <= 0 || n_burnin < 0 || n_iter <= n_burnin)
      throw ValidationError("sampler: require n_iter > n_burnin >= 0");
    if (n_chains < 1) throw ValidationError("sampler: need at least one chain");
    if (!(scale_bound > 1.0)) throw ValidationError("sampler: scale bound F must exceed 1");
    if (thin < 1) throw ValidationError("sampler: thin must be >= 1");
  }
};

// Column layout of a stored chain: mu, tau, xi, beta_mu, u_mu, beta_tau,
// u_tau, then the six hyperparameters.
struct TraceLayout {
  int j = 0;
  int n = 0;

  int cols() const { return 2 * j + 1 + 2 * n + 4 + 6; }
  int mu_at(int i) const { return i; }
  int tau_at(int i) const { return j + i; }
  int xi_at() const { return 2 * j; }
  int beta_mu_at(int k) const { return 2 * j + 1 + k; }
  int u_mu_at(int i) const { return 2 * j + 3 + i; }
  int beta_tau_at(int k) const { return 2 * j + 3 + n + k; }
  int u_tau_at(int i) const { return 2 * j + 5 + n + i; }
  int theta_at(int k) const { return 2 * j + 5 + 2 * n + k; }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(cols()));
    for (int i = 0; i < j; ++i) names.push_back("mu_" + std::to_string(i + 1));
    for (int i = 0; i < j; ++i) names.push_back("tau_" + std::to_string(i + 1));
    names.push_back("xi");
    names.push_back("beta_mu_1");
    names.push_back("beta_mu_2");
    for (int i = 0; i < n; ++i) names.push_back("u_mu_" + std::to_string(i + 1));
    names.push_back("beta_tau_1");
    names.push_back("beta_tau_2");
    for (int i = 0; i < n; ++i) names.push_back("u_tau_" + std::to_string(i + 1));
    for (const char* t : {"kappa_u_mu", "omega_u_mu", "kappa_u_tau", "omega_u_tau",
                          "kappa_v_mu", "kappa_v_tau"})
      names.push_back(t);
    return names;
  }
};

struct AcceptanceCounters {
  long eta_accepted = 0;
  long eta_proposed = 0;
  long eta_mode_failures = 0;
  long xi_accepted = 0;
  long xi_proposed = 0;
  long xi_variance_failures = 0;
  long nu_theta_accepted = 0;
  long nu_theta_proposed = 0;
  long nu_theta_factor_failures = 0;

  double eta_rate() const { return eta_proposed ? double(eta_accepted) / eta_proposed : 0.0; }
  double xi_rate() const { return xi_proposed ? double(xi_accepted) / xi_proposed : 0.0; }
  double nu_theta_rate() const {
    return nu_theta_proposed ? double(nu_theta_accepted) / nu_theta_proposed : 0.0;
  }
};

struct ChainTrace {
  TraceLayout layout;
  long n_rows = 0;
  std::vector<double> data;  // row-major, n_rows x layout.cols()
  AcceptanceCounters accept;
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string abort_reason;

  void reserve(long rows) { data.reserve(static_cast<std::size_t>(rows) * layout.cols()); }

  void push_row(const LatentState& state, const HyperState& theta) {
    const int j = layout.j, n = layout.n;
    data.insert(data.end(), state.mu.data(), state.mu.data() + j);
    data.insert(data.end(), state.tau.data(), state.tau.data() + j);
    data.push_back(state.xi);
    data.push_back(state.beta_mu(0));
    data.push_back(state.beta_mu(1));
    data.insert(data.end(), state.u_mu.data(), state.u_mu.data() + n);
    data.push_back(state.beta_tau(0));
    data.push_back(state.beta_tau(1));
    data.insert(data.end(), state.u_tau.data(), state.u_tau.data() + n);
    const auto th = theta.to_vector();
    data.insert(data.end(), th.data(), th.data() + 6);
    ++n_rows;
  }

  double value(long row, int col) const {
    return data[static_cast<std::size_t>(row) * layout.cols() + col];
  }

  std::vector<double> column(int col, long from_row = 0) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_rows - from_row));
    for (long r = from_row; r < n_rows; ++r) out.push_back(value(r, col));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Multiplicative hyperparameter proposal: theta* = f theta with
// pi(f) proportional to 1 + 1/f on [1/F, F]. The transition density
// q(theta*|theta) = c (theta + theta*)/(theta theta*) is symmetric.

inline double scaling_factor_pdf(double f, double bound) {
  if (f < 1.0 / bound || f > bound) return 0.0;
  const double z = (bound - 1.0 / bound) + 2.0 * std::log(bound);
  return (1.0 + 1.0 / f) / z;
}

inline double scaling_factor_cdf(double f, double bound) {
  if (f <= 1.0 / bound) return 0.0;
  if (f >= bound) return 1.0;
  const double z = (bound - 1.0 / bound) + 2.0 * std::log(bound);
  return (f - 1.0 / bound + std::log(f) + std::log(bound)) / z;
}

// Inverse CDF: solves x + log x = c by safeguarded Newton.
inline double scaling_factor_quantile(double u, double bound) {
  if (!(bound > 1.0)) throw std::domain_error("scaling_factor_quantile: bound must exceed 1");
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("scaling_factor_quantile: u outside [0, 1]");
  const double lo = 1.0 / bound;
  const double z = (bound - lo) + 2.0 * std::log(bound);
  const double c = u * z + lo + std::log(lo);
  double x = std::clamp(c, lo, bound);
  for (int it = 0; it < 60; ++it) {
    const double g = x + std::log(x) - c;
    const double step = g / (1.0 + 1.0 / x);
    x = std::clamp(x - step, lo, bound);
    if (std::fabs(step) < 1e-15 * std::max(1.0, x)) break;
  }
  return x;
}

inline double scaling_factor_sample(double bound, Rng& rng) {
  return scaling_factor_quantile(rng.uniform(), bound);
}

// Each component scaled by an independent draw of f.
inline HyperState theta_propose(const HyperState& theta, double bound, Rng& rng) {
  auto v = theta.to_vector();
  for (int i = 0; i < 6; ++i) v(i) *= scaling_factor_sample(bound, rng);
  return HyperState::from_vector(v);
}

// Individual log terms of the (nu, theta) acceptance ratio, exposed for
// verification against dense computations.
struct NuThetaTerms {
  double log_prior_theta_star = 0.0;
  double log_prior_theta_cur = 0.0;
  double log_eta_given_nu_star = 0.0;
  double log_nu_star_prior = 0.0;
  double log_nu_star_cond = 0.0;  // pi(nu* | eta, theta*)
  double log_eta_given_nu_cur = 0.0;
  double log_nu_cur_prior = 0.0;
  double log_nu_cur_cond = 0.0;  // pi(nu | eta, theta)

  double log_ratio() const {
    return (log_prior_theta_star - log_prior_theta_cur) + log_eta_given_nu_star +
           log_nu_star_prior - log_nu_star_cond + log_nu_cur_cond - log_eta_given_nu_cur -
           log_nu_cur_prior;
  }
};

// ---------------------------------------------------------------------------

class SplitSampler {
 public:
  SplitSampler(const ModelSpec& model, const std::vector<std::vector<double>>& y,
               const SamplerConfig& config)
      : model_(model), y_(y), config_(config) {
    model_.validate();
    config_.validate();
    if (y_.size() != static_cast<std::size_t>(model_.n_sites))
      throw ValidationError("sampler: observation sets do not match the site count");
    const int j = model_.n_sites, n = model_.n_nodes;
    // Z row blocks for mu and tau; the xi row of Z is zero.
    std::vector<Eigen::Triplet<double>> tmu, ttau;
    for (int i = 0; i < j; ++i) {
      tmu.emplace_back(i, 0, model_.x_mu(i, 0));
      tmu.emplace_back(i, 1, model_.x_mu(i, 1));
      ttau.emplace_back(i, 2 + n, model_.x_tau(i, 0));
      ttau.emplace_back(i, 3 + n, model_.x_tau(i, 1));
    }
    for (int k = 0; k < model_.a_s.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(model_.a_s, k); it; ++it) {
        tmu.emplace_back(static_cast<int>(it.row()), 2 + static_cast<int>(it.col()),
                         it.value());
        ttau.emplace_back(static_cast<int>(it.row()), 4 + n + static_cast<int>(it.col()),
                          it.value());
      }
    z_mu_.resize(j, 2 * n + 4);
    z_mu_.setFromTriplets(tmu.begin(), tmu.end());
    z_mu_.makeCompressed();
    z_tau_.resize(j, 2 * n + 4);
    z_tau_.setFromTriplets(ttau.begin(), ttau.end());
    z_tau_.makeCompressed();
    zt_mu_ = z_mu_.transpose();
    zt_tau_ = z_tau_.transpose();
    // Fixed quadratic blocks of Z^T Q_eps Z.
    b_mu_ = (zt_mu_ * z_mu_).pruned();
    b_tau_ = (zt_tau_ * z_tau_).pruned();
    b_mu_.makeCompressed();
    b_tau_.makeCompressed();
  }

  const ModelSpec& model() const { return model_; }

  // Prepares the factorization workspace at theta; must succeed before the
  // first iteration.
  void reset(const HyperState& theta) {
    if (!fill_workspace(*cur_, theta))
      throw NumericError("sampler: initial hyperparameters give a non-PD precision");
  }

  // Algorithm for the data-rich (mu, tau) block: per-site Newton mode search,
  // Gaussian proposal from N(mode, (Q_A - H)^{-1}) and per-site Metropolis
  // acceptance with the quadratic correction terms.
  void eta_block_update(LatentState& state, const HyperState& theta, Rng& rng,
                        AcceptanceCounters& acc) {
    const Eigen::VectorXd nu = state.nu_vector();
    const Eigen::VectorXd prior_mean_mu = z_mu_ * nu;
    const Eigen::VectorXd prior_mean_tau = z_tau_ * nu;
    const double kvm = theta.kappa_v_mu, kvt = theta.kappa_v_tau;
    for (int i = 0; i < model_.n_sites; ++i) {
      ++acc.eta_proposed;
      const std::span<const double> ys(y_[static_cast<std::size_t>(i)]);
      const double m = prior_mean_mu(i), s = prior_mean_tau(i);
      Eigen::Vector2d cur(state.mu(i), state.tau(i));
      Eigen::Vector2d mode = cur;
      if (!find_site_mode(ys, state.xi, m, s, kvm, kvt, mode)) {
        ++acc.eta_mode_failures;
        continue;  // keep the current value for this site
      }
      const GradHess gh = site_loglik_grad_hess(ys, {mode(0), mode(1), state.xi});
      const Eigen::Matrix2d h = gh.hess;
      const Eigen::Vector2d b = gh.grad - h * mode;
      Eigen::Matrix2d prec;
      prec << kvm - h(0, 0), -h(0, 1), -h(1, 0), kvt - h(1, 1);
      // 2x2 Cholesky of the proposal precision
      if (!(prec(0, 0) > 0.0)) {
        ++acc.eta_mode_failures;
        continue;
      }
      const double l00 = std::sqrt(prec(0, 0));
      const double l10 = prec(1, 0) / l00;
      const double d22 = prec(1, 1) - l10 * l10;
      if (!(d22 > 0.0)) {
        ++acc.eta_mode_failures;
        continue;
      }
      const double l11 = std::sqrt(d22);
      // proposal = mode + L^{-T} z
      const double z0 = rng.normal(), z1 = rng.normal();
      Eigen::Vector2d prop;
      prop(1) = mode(1) + z1 / l11;
      prop(0) = mode(0) + (z0 - l10 * (prop(1) - mode(1))) / l00;
      const double f_prop = site_loglik(ys, {prop(0), prop(1), state.xi});
      const double log_u = std::log(rng.uniform());
      if (!std::isfinite(f_prop)) continue;  // outside support: reject
      const double f_cur = site_loglik(ys, {cur(0), cur(1), state.xi});
      const double corr_prop = -0.5 * prop.dot(h * prop) - b.dot(prop);
      const double corr_cur = -0.5 * cur.dot(h * cur) - b.dot(cur);
      const double log_r = f_prop + corr_prop - f_cur - corr_cur;
      if (log_u < log_r) {
        state.mu(i) = prop(0);
        state.tau(i) = prop(1);
        ++acc.eta_accepted;
      }
    }
  }

  // Algorithm for the shape parameter: scalar mode search, Gaussian proposal
  // N(xi0, (kappa_xi - f''(xi0))^{-1}) and Metropolis correction.
  void xi_block_update(LatentState& state, Rng& rng, AcceptanceCounters& acc) {
    ++acc.xi_proposed;
    const double kxi = model_.prior.kappa_xi;
    double xi0 = state.xi;
    double d1 = 0.0, d2 = 0.0;
    bool converged = false;
    double psi0 = log_post_xi(state, xi0);
    if (!std::isfinite(psi0))
      throw NumericError("xi_block_update: current state has non-finite density");
    for (int it = 0; it < config_.newton_max_steps; ++it) {
      std::tie(d1, d2) = loglik_dxi_d2xi(y_, state.mu, state.tau, xi0);
      const double grad = -kxi * xi0 + d1;
      if (std::fabs(grad) < config_.newton_tol) {
        converged = true;
        break;
      }
      const double curv = kxi - d2;
      double step = curv > 0.0 ? grad / curv : grad / (kxi + std::fabs(d2));
      bool improved = false;
      for (int halving = 0; halving < 40; ++halving) {
        const double cand = xi0 + step;
        const double psi = log_post_xi(state, cand);
        if (std::isfinite(psi) && psi > psi0) {
          xi0 = cand;
          psi0 = psi;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) {
        converged = std::fabs(grad) < 1e-4;  // flat objective: treat as mode
        break;
      }
    }
    if (!converged) {
      // gradient may already be tiny on the last evaluation
      std::tie(d1, d2) = loglik_dxi_d2xi(y_, state.mu, state.tau, xi0);
      if (std::fabs(-kxi * xi0 + d1) > 1e-4) {
        ++acc.xi_variance_failures;
        return;
      }
    } else {
      std::tie(d1, d2) = loglik_dxi_d2xi(y_, state.mu, state.tau, xi0);
    }
    const double prec = kxi - d2;
    if (!(prec > 0.0)) {
      ++acc.xi_variance_failures;
      return;
    }
    const double prop = xi0 + rng.normal() / std::sqrt(prec);
    const double log_u = std::log(rng.uniform());
    const double fb_prop = total_loglik_xi(y_, state.mu, state.tau, prop);
    if (!std::isfinite(fb_prop)) return;  // outside support: reject
    const double fb_cur = total_loglik_xi(y_, state.mu, state.tau, state.xi);
    const auto rho = [&](double xi) {
      return (-0.5 * d2 * xi - (d1 - d2 * xi0)) * xi;
    };
    const double log_r = fb_prop + rho(prop) - fb_cur - rho(state.xi);
    if (log_u < log_r) {
      state.xi = prop;
      ++acc.xi_accepted;
    }
  }

  // Joint (nu, theta) block: multiplicative theta proposal, exact Gaussian
  // draw of nu* from its full conditional at theta*, joint accept/reject.
  void nu_theta_block_update(LatentState& state, HyperState& theta, Rng& rng,
                             AcceptanceCounters& acc) {
    ++acc.nu_theta_proposed;
    const HyperState theta_star = theta_propose(theta, config_.scale_bound, rng);
    if (!fill_workspace(*prop_, theta_star)) {
      ++acc.nu_theta_factor_failures;
      // still consume the Gaussian draws to keep the stream advancing
      for (int i = 0; i < model_.nu_dim(); ++i) rng.normal();
      rng.uniform();
      return;
    }
    const Eigen::VectorXd b_star =
        theta_star.kappa_v_mu * (zt_mu_ * state.mu) + theta_star.kappa_v_tau * (zt_tau_ * state.tau);
    const Eigen::VectorXd nu_star = prop_->chol_c.sample_canonical(b_star, rng);
    NuThetaTerms terms;
    evaluate_nu_theta(state, theta, state.nu_vector(), theta_star, nu_star, terms);
    const double log_u = std::log(rng.uniform());
    if (log_u < terms.log_ratio()) {
      state.set_nu(nu_star);
      theta = theta_star;
      cur_.swap(prop_);
      ++acc.nu_theta_accepted;
    }
  }

  // Ratio terms for given current and proposed states. Requires that cur_
  // matches theta_cur and prop_ matches theta_star (filled by the caller or
  // by nu_theta_block_update).
  void evaluate_nu_theta(const LatentState& state, const HyperState& theta_cur,
                         const Eigen::VectorXd& nu_cur, const HyperState& theta_star,
                         const Eigen::VectorXd& nu_star, NuThetaTerms& terms) const {
    terms.log_prior_theta_star = log_hyperprior(theta_star, model_.prior);
    terms.log_prior_theta_cur = log_hyperprior(theta_cur, model_.prior);
    terms.log_eta_given_nu_star = log_eta_given_nu(state, nu_star, theta_star);
    terms.log_eta_given_nu_cur = log_eta_given_nu(state, nu_cur, theta_cur);
    terms.log_nu_star_prior = log_nu_prior(*prop_, nu_star);
    terms.log_nu_cur_prior = log_nu_prior(*cur_, nu_cur);
    terms.log_nu_star_cond = log_nu_conditional(*prop_, state, theta_star, nu_star);
    terms.log_nu_cur_cond = log_nu_conditional(*cur_, state, theta_cur, nu_cur);
  }

  // Builds the proposal-side workspace for external verification.
  bool prepare_proposal(const HyperState& theta_star) {
    return fill_workspace(*prop_, theta_star);
  }

  // Initial state: (mu_i, tau_i) at the site-wise maximum likelihood
  // estimates, betas from a weighted least-squares fit of those estimates on
  // the covariates, spatial effects at zero, xi at 0.1 and theta at the
  // hyperprior medians. Starting sites at the regression prediction instead
  // freezes poorly-predicted sites: the eta proposal is an independence
  // kernel whose Gaussian tail the initial point must not escape from.
  std::pair<LatentState, HyperState> initial_state() const {
    const int j = model_.n_sites;
    LatentState state;
    state.mu.resize(j);
    state.tau.resize(j);
    state.u_mu = Eigen::VectorXd::Zero(model_.n_nodes);
    state.u_tau = Eigen::VectorXd::Zero(model_.n_nodes);
    state.xi = 0.1;
    Eigen::VectorXd mu_hat(j), tau_hat(j), weight(j);
    for (int i = 0; i < j; ++i) {
      const auto& ys = y_[static_cast<std::size_t>(i)];
      weight(i) = static_cast<double>(ys.size());
      site_ml_estimate(ys, state.xi, mu_hat(i), tau_hat(i));
    }
    state.beta_mu = ridge_wls(model_.x_mu, mu_hat, weight);
    state.beta_tau = ridge_wls(model_.x_tau, tau_hat, weight);
    for (int i = 0; i < j; ++i) {
      const std::span<const double> ys(y_[static_cast<std::size_t>(i)]);
      if (ys.empty()) {
        // no data: fall back to the regression prediction
        state.mu(i) = model_.x_mu.row(i) * state.beta_mu;
        state.tau(i) = model_.x_tau.row(i) * state.beta_tau;
        continue;
      }
      state.mu(i) = mu_hat(i);
      state.tau(i) = tau_hat(i);
      for (int widen = 0; widen < 60; ++widen) {
        if (std::isfinite(site_loglik(ys, {state.mu(i), state.tau(i), state.xi}))) break;
        state.tau(i) += 0.5;
      }
    }
    return {state, HyperState::prior_median(model_.prior)};
  }

  // Mild per-chain overdispersion of the starting point, kept inside the
  // likelihood support.
  void jitter_state(LatentState& state, HyperState& theta, Rng& rng) const {
    for (int i = 0; i < model_.n_sites; ++i) {
      const std::span<const double> ys(y_[static_cast<std::size_t>(i)]);
      const double mu0 = state.mu(i), tau0 = state.tau(i);
      double scale = 1.0;
      const double dm = 0.3 * std::exp(tau0) * rng.normal();
      const double dt = 0.1 * rng.normal();
      for (int attempt = 0; attempt < 20; ++attempt) {
        state.mu(i) = mu0 + scale * dm;
        state.tau(i) = tau0 + scale * dt;
        if (std::isfinite(site_loglik(ys, {state.mu(i), state.tau(i), state.xi}))) break;
        scale *= 0.5;
        state.mu(i) = mu0;
        state.tau(i) = tau0;
      }
    }
    const double xi0 = state.xi;
    const double dxi = 0.03 * rng.normal();
    double scale = 1.0;
    for (int attempt = 0; attempt < 20; ++attempt) {
      state.xi = xi0 + scale * dxi;
      if (std::isfinite(total_loglik_xi(y_, state.mu, state.tau, state.xi))) break;
      scale *= 0.5;
      state.xi = xi0;
    }
    auto v = theta.to_vector();
    for (int i = 0; i < 6; ++i) v(i) *= std::exp(0.15 * rng.normal());
    theta = HyperState::from_vector(v);
  }

 private:
  struct ThetaWorkspace {
    Eigen::SparseMatrix<double> q_nu;
    Eigen::SparseMatrix<double> q_c;
    SparseCholesky chol_nu;
    SparseCholesky chol_c;
  };

  bool fill_workspace(ThetaWorkspace& ws, const HyperState& theta) const {
    if (!theta.positive()) return false;
    ws.q_nu = build_Qnu(model_, theta);
    ws.q_c = ws.q_nu + theta.kappa_v_mu * b_mu_ + theta.kappa_v_tau * b_tau_;
    return ws.chol_nu.factorize(ws.q_nu) && ws.chol_c.factorize(ws.q_c);
  }

  double log_eta_given_nu(const LatentState& state, const Eigen::VectorXd& nu,
                          const HyperState& theta) const {
    const int j = model_.n_sites;
    const Eigen::VectorXd rm = state.mu - z_mu_ * nu;
    const Eigen::VectorXd rt = state.tau - z_tau_ * nu;
    const double kxi = model_.prior.kappa_xi;
    const double quad = theta.kappa_v_mu * rm.squaredNorm() +
                        theta.kappa_v_tau * rt.squaredNorm() + kxi * state.xi * state.xi;
    const double log_det = j * std::log(theta.kappa_v_mu) + j * std::log(theta.kappa_v_tau) +
                           std::log(kxi);
    return 0.5 * log_det - 0.5 * (2 * j + 1) * std::log(2.0 * std::numbers::pi) - 0.5 * quad;
  }

  double log_nu_prior(const ThetaWorkspace& ws, const Eigen::VectorXd& nu) const {
    const double n = static_cast<double>(model_.nu_dim());
    return 0.5 * ws.chol_nu.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi) -
           0.5 * nu.dot(ws.q_nu * nu);
  }

  double log_nu_conditional(const ThetaWorkspace& ws, const LatentState& state,
                            const HyperState& theta, const Eigen::VectorXd& nu) const {
    const Eigen::VectorXd b =
        theta.kappa_v_mu * (zt_mu_ * state.mu) + theta.kappa_v_tau * (zt_tau_ * state.tau);
    const Eigen::VectorXd mean = ws.chol_c.solve(b);
    const Eigen::VectorXd d = nu - mean;
    const double n = static_cast<double>(model_.nu_dim());
    return 0.5 * ws.chol_c.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi) -
           0.5 * d.dot(ws.q_c * d);
  }

  double log_post_xi(const LatentState& state, double xi) const {
    const double fb = total_loglik_xi(y_, state.mu, state.tau, xi);
    if (!std::isfinite(fb)) return -std::numeric_limits<double>::infinity();
    return -0.5 * model_.prior.kappa_xi * xi * xi + fb;
  }

  // Damped Newton ascent of the per-site conditional posterior of (mu, tau).
  bool find_site_mode(std::span<const double> ys, double xi, double m, double s, double kvm,
                      double kvt, Eigen::Vector2d& point) const {
    const auto log_post = [&](const Eigen::Vector2d& p) {
      const double f = site_loglik(ys, {p(0), p(1), xi});
      if (!std::isfinite(f)) return -std::numeric_limits<double>::infinity();
      const double dm = p(0) - m, dt = p(1) - s;
      return -0.5 * kvm * dm * dm - 0.5 * kvt * dt * dt + f;
    };
    double cur_post = log_post(point);
    if (!std::isfinite(cur_post)) return false;
    for (int it = 0; it < config_.newton_max_steps; ++it) {
      const GradHess gh = site_loglik_grad_hess(ys, {point(0), point(1), xi});
      Eigen::Vector2d grad(-kvm * (point(0) - m) + gh.grad(0),
                           -kvt * (point(1) - s) + gh.grad(1));
      if (grad.cwiseAbs().maxCoeff() < config_.newton_tol) return true;
      Eigen::Matrix2d a;
      a << kvm - gh.hess(0, 0), -gh.hess(0, 1), -gh.hess(1, 0), kvt - gh.hess(1, 1);
      // regularize to positive definite if the likelihood is locally convex
      const double tr = a(0, 0) + a(1, 1);
      const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
      const double eig_min = 0.5 * (tr - std::sqrt(std::max(tr * tr - 4.0 * det, 0.0)));
      if (eig_min <= 0.0) {
        const double bump = -eig_min + 1e-6 * (std::fabs(tr) + 1.0);
        a(0, 0) += bump;
        a(1, 1) += bump;
      }
      Eigen::Vector2d step = a.inverse() * grad;
      bool improved = false;
      for (int halving = 0; halving < 40; ++halving) {
        const Eigen::Vector2d cand = point + step;
        const double cand_post = log_post(cand);
        if (std::isfinite(cand_post) && cand_post > cur_post) {
          point = cand;
          cur_post = cand_post;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) return grad.cwiseAbs().maxCoeff() < 1e-4;
    }
    const GradHess gh = site_loglik_grad_hess(ys, {point(0), point(1), xi});
    const Eigen::Vector2d grad(-kvm * (point(0) - m) + gh.grad(0),
                               -kvt * (point(1) - s) + gh.grad(1));
    return grad.cwiseAbs().maxCoeff() < 1e-4;
  }

  // Gumbel moment start refined by a short prior-free Newton ascent.
  void site_ml_estimate(const std::vector<double>& ys, double xi, double& mu_hat,
                        double& tau_hat) const {
    if (ys.empty()) {
      mu_hat = 0.0;
      tau_hat = 0.0;
      return;
    }
    double mean = 0.0;
    for (double v : ys) mean += v;
    mean /= static_cast<double>(ys.size());
    double sd = 0.0;
    if (ys.size() > 1) {
      for (double v : ys) sd += (v - mean) * (v - mean);
      sd = std::sqrt(sd / static_cast<double>(ys.size() - 1));
    }
    sd = std::max(sd, 1e-2 + 0.05 * std::fabs(mean));
    const double sigma0 = sd * std::numbers::sqrt3 * std::numbers::inv_pi * std::sqrt(2.0);
    mu_hat = mean - kEulerGamma * sigma0;
    tau_hat = std::log(sigma0);
    Eigen::Vector2d p(mu_hat, tau_hat);
    for (int widen = 0; widen < 60; ++widen) {
      if (std::isfinite(site_loglik(ys, {p(0), p(1), xi}))) break;
      p(1) += 0.5;
    }
    if (ys.size() >= 3 && find_site_mode(ys, xi, 0.0, 0.0, 0.0, 0.0, p)) {
      mu_hat = p(0);
      tau_hat = p(1);
    } else {
      mu_hat = p(0);
      tau_hat = p(1);
    }
  }

  static Eigen::Vector2d ridge_wls(const Eigen::MatrixX2d& x, const Eigen::VectorXd& target,
                                   const Eigen::VectorXd& weight) {
    Eigen::Matrix2d xtx = x.transpose() * weight.asDiagonal() * x;
    const Eigen::Vector2d xty = x.transpose() * (weight.asDiagonal() * target);
    const double ridge = 1e-8 * (xtx.trace() + 1.0);
    xtx(0, 0) += ridge;
    xtx(1, 1) += ridge;
    return xtx.ldlt().solve(xty);
  }

  ModelSpec model_;
  std::vector<std::vector<double>> y_;
  SamplerConfig config_;
  Eigen::SparseMatrix<double> z_mu_, z_tau_;    // J x (2n+4) row blocks of Z
  Eigen::SparseMatrix<double> zt_mu_, zt_tau_;  // transposes
  Eigen::SparseMatrix<double> b_mu_, b_tau_;    // Z_mu^T Z_mu, Z_tau^T Z_tau
  std::unique_ptr<ThetaWorkspace> cur_ = std::make_unique<ThetaWorkspace>();
  std::unique_ptr<ThetaWorkspace> prop_ = std::make_unique<ThetaWorkspace>();
};

// ---------------------------------------------------------------------------

struct ChainInit {
  LatentState state;
  HyperState theta;
};

// Runs one chain to completion; deterministic given the seed.
inline ChainTrace run_single_chain(const SamplerConfig& config, const ModelSpec& model,
                                   const std::vector<std::vector<double>>& y,
                                   std::uint64_t seed, const std::optional<ChainInit>& init,
                                   std::ostream* stream = nullptr) {
  ChainTrace trace;
  trace.layout = {model.n_sites, model.n_nodes};
  trace.seed = seed;
  Rng rng(seed);
  try {
    SplitSampler sampler(model, y, config);
    LatentState state;
    HyperState theta;
    if (init) {
      state = init->state;
      theta = init->theta;
    } else {
      std::tie(state, theta) = sampler.initial_state();
      sampler.jitter_state(state, theta, rng);
    }
    sampler.reset(theta);
    trace.reserve(config.n_iter / config.thin + 1);
    if (stream) {
      const auto names = trace.layout.column_names();
      *stream << "iteration";
      for (const auto& n : names) *stream << "," << n;
      *stream << "\n";
    }
    char buf[32];
    for (long it = 0; it < config.n_iter; ++it) {
      sampler.eta_block_update(state, theta, rng, trace.accept);
      sampler.xi_block_update(state, rng, trace.accept);
      sampler.nu_theta_block_update(state, theta, rng, trace.accept);
      if (it % config.thin == 0) {
        trace.push_row(state, theta);
        if (stream) {
          *stream << it;
          const long row = trace.n_rows - 1;
          for (int c = 0; c < trace.layout.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", trace.value(row, c));
            *stream << "," << buf;
          }
          *stream << "\n";
        }
      }
    }
  } catch (const std::exception& e) {
    trace.aborted = true;
    trace.abort_reason = e.what();
  }
  return trace;
}

// Runs n_chains independent chains, the c-th seeded with seed + c. Chains
// execute concurrently subject to the thread cap; traces are streamed to
// out_dir/chain_<c>.csv when a directory is given.
inline std::vector<ChainTrace> run_chains(const SamplerConfig& config, const ModelSpec& model,
                                          const std::vector<std::vector<double>>& y,
                                          const std::filesystem::path* out_dir = nullptr,
                                          const std::vector<ChainInit>* inits = nullptr) {
  config.validate();
  std::vector<ChainTrace> traces(static_cast<std::size_t>(config.n_chains));
  const int max_threads = config.threads > 0
                              ? std::min(config.threads, config.n_chains)
                              : config.n_chains;
  std::vector<int> chain_ids(static_cast<std::size_t>(config.n_chains));
  for (int c = 0; c < config.n_chains; ++c) chain_ids[static_cast<std::size_t>(c)] = c;
  const auto worker = [&](int first, int stride) {
    for (int c = first; c < config.n_chains; c += stride) {
      auto& trace = traces[static_cast<std::size_t>(c)];
      try {
        std::optional<ChainInit> init;
        if (inits && static_cast<std::size_t>(c) < inits->size())
          init = (*inits)[static_cast<std::size_t>(c)];
        std::ofstream out;
        std::ostream* stream = nullptr;
        if (out_dir) {
          out.open(*out_dir / ("chain_" + std::to_string(c) + ".csv"));
          if (!out) throw ValidationError("run_chains: cannot write chain CSV");
          stream = &out;
        }
        trace = run_single_chain(config, model, y,
                                 config.seed + static_cast<std::uint64_t>(c), init, stream);
      } catch (const std::exception& e) {
        trace.layout = {model.n_sites, model.n_nodes};
        trace.aborted = true;
        trace.abort_reason = e.what();
      }
    }
  };
  if (max_threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(max_threads));
    for (int t = 0; t < max_threads; ++t) pool.emplace_back(worker, t, max_threads);
    for (auto& th : pool) th.join();
  }
  return traces;
}

}  // namespace spex
