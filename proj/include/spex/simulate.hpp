// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spex/gev.hpp"
#include "spex/gmrf.hpp"
#include "spex/model.hpp"
#include "spex/observations.hpp"
#include "spex/rng.hpp"

namespace spex {

struct SimulationParams {
  Eigen::Vector2d beta_mu{20.0, 10.0};
  Eigen::Vector2d beta_tau{0.5, 0.5};
  double xi = 0.1;
  HyperState theta;  // defaults to the hyperprior medians at simulation time
  int n_years = 50;
  int first_year = 1958;
  double missing_fraction = 0.0;
  std::uint64_t seed = 1;
};

struct SimulationTruth {
  Eigen::Vector2d beta_mu;
  Eigen::Vector2d beta_tau;
  double xi = 0.0;
  HyperState theta;
  Eigen::VectorXd mu;   // per-site location
  Eigen::VectorXd tau;  // per-site log-scale
  Eigen::VectorXd u_mu;
  Eigen::VectorXd u_tau;
};

struct SimulationResult {
  ObservationTable observations;
  SimulationTruth truth;
};

// Draws latent fields from the prior at the given hyperparameters and
// generates GEV observations per (site, year) through the quantile transform.
inline SimulationResult simulate_dataset(const ModelSpec& model,
                                         const std::vector<SiteInfo>& sites,
                                         const SimulationParams& params) {
  model.validate();
  if (static_cast<int>(sites.size()) != model.n_sites)
    throw ValidationError("simulate: site list does not match the model");
  if (params.n_years < 1) throw ValidationError("simulate: need at least one year");
  Rng rng(params.seed);

  const Eigen::SparseMatrix<double> q_u_mu =
      spde_precision(model.fem, {params.theta.kappa_u_mu, params.theta.omega_u_mu});
  const Eigen::SparseMatrix<double> q_u_tau =
      spde_precision(model.fem, {params.theta.kappa_u_tau, params.theta.omega_u_tau});
  const Eigen::VectorXd zero;
  SimulationTruth truth;
  truth.beta_mu = params.beta_mu;
  truth.beta_tau = params.beta_tau;
  truth.xi = params.xi;
  truth.theta = params.theta;
  truth.u_mu = sample_gmrf(q_u_mu, zero, rng);
  truth.u_tau = sample_gmrf(q_u_tau, zero, rng);

  const double sd_v_mu = 1.0 / std::sqrt(params.theta.kappa_v_mu);
  const double sd_v_tau = 1.0 / std::sqrt(params.theta.kappa_v_tau);
  truth.mu = model.x_mu * params.beta_mu + model.a_s * truth.u_mu;
  truth.tau = model.x_tau * params.beta_tau + model.a_s * truth.u_tau;
  for (int i = 0; i < model.n_sites; ++i) {
    truth.mu(i) += sd_v_mu * rng.normal();
    truth.tau(i) += sd_v_tau * rng.normal();
  }

  SimulationResult result;
  result.truth = truth;
  long line = 1;
  for (int i = 0; i < model.n_sites; ++i) {
    const GevParams p{truth.mu(i), truth.tau(i), truth.xi};
    for (int t = 0; t < params.n_years; ++t) {
      const double keep = rng.uniform();
      const double y = gev_quantile(rng.uniform(), p);
      if (keep < params.missing_fraction) continue;
      if (!(y > 0.0))
        throw NumericError("simulate: drew a nonpositive observation; "
                           "choose parameters with a negligible mass below zero");
      result.observations.add(sites[static_cast<std::size_t>(i)].id,
                              params.first_year + t, y, line++);
    }
  }
  result.observations.sort_years();
  return result;
}

// Ground-truth sidecar: global parameters, then one line per site.
inline void write_truth(const std::filesystem::path& path, const SimulationTruth& truth,
                        const std::vector<SiteInfo>& sites) {
  std::ofstream out(path);
  if (!out) throw ValidationError("simulate: cannot write " + path.string());
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "beta_mu_1=%.17g\nbeta_mu_2=%.17g\nbeta_tau_1=%.17g\nbeta_tau_2=%.17g\n"
                "xi=%.17g\nkappa_u_mu=%.17g\nomega_u_mu=%.17g\nkappa_u_tau=%.17g\n"
                "omega_u_tau=%.17g\nkappa_v_mu=%.17g\nkappa_v_tau=%.17g\n",
                truth.beta_mu(0), truth.beta_mu(1), truth.beta_tau(0), truth.beta_tau(1),
                truth.xi, truth.theta.kappa_u_mu, truth.theta.omega_u_mu,
                truth.theta.kappa_u_tau, truth.theta.omega_u_tau, truth.theta.kappa_v_mu,
                truth.theta.kappa_v_tau);
  out << buf;
  out << "site_id,mu,tau\n";
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g", sites[i].id.c_str(),
                  truth.mu(static_cast<Eigen::Index>(i)), truth.tau(static_cast<Eigen::Index>(i)));
    out << buf << "\n";
  }
}

}  // namespace spex
