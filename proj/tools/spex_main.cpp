// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "spex/pipeline.hpp"

namespace {

struct CliOverrides {
  std::string config;
  std::string out;
  std::string observations, sites, covariate, mesh;
  long seed = -1, chains = -1, iters = -1, burnin = -1, threads = -1;
  std::vector<double> quantiles;
};

spex::RunConfig resolve(const CliOverrides& ov) {
  spex::RunConfig cfg;
  cfg.sim.theta = spex::HyperState::prior_median(spex::PriorConstants{});
  if (!ov.config.empty()) cfg = spex::load_config(ov.config);
  if (!ov.out.empty()) cfg.out = ov.out;
  if (!ov.observations.empty()) cfg.observations = ov.observations;
  if (!ov.sites.empty()) cfg.sites = ov.sites;
  if (!ov.covariate.empty()) cfg.covariate = ov.covariate;
  if (!ov.mesh.empty()) cfg.mesh = ov.mesh;
  if (ov.seed >= 0) cfg.sampler.seed = static_cast<std::uint64_t>(ov.seed);
  if (ov.chains >= 0) cfg.sampler.n_chains = static_cast<int>(ov.chains);
  if (ov.iters >= 0) cfg.sampler.n_iter = ov.iters;
  if (ov.burnin >= 0) cfg.sampler.n_burnin = ov.burnin;
  if (ov.threads >= 0) cfg.sampler.threads = static_cast<int>(ov.threads);
  if (!ov.quantiles.empty()) cfg.quantiles = ov.quantiles;
  return cfg;
}

void add_common(CLI::App* sub, CliOverrides& ov) {
  sub->add_option("--config", ov.config, "key=value configuration file");
  sub->add_option("--out", ov.out, "output directory");
  sub->add_option("--observations", ov.observations, "observations CSV");
  sub->add_option("--sites", ov.sites, "sites CSV");
  sub->add_option("--covariate", ov.covariate, "covariate raster (ESRI ASCII)");
  sub->add_option("--mesh", ov.mesh, "mesh file");
  sub->add_option("--seed", ov.seed, "RNG seed");
  sub->add_option("--chains", ov.chains, "number of MCMC chains");
  sub->add_option("--iters", ov.iters, "iterations per chain");
  sub->add_option("--burnin", ov.burnin, "burn-in iterations");
  sub->add_option("--threads", ov.threads, "thread cap for chain execution");
  sub->add_option("--quantile", ov.quantiles, "prediction quantile level (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spex: spatial extreme value modeling with SPDE latent fields"};
  app.require_subcommand(1);

  CliOverrides ov;
  std::function<void(const spex::RunConfig&)> action;

  auto* tune = app.add_subcommand("tune-covariate",
                                  "tune the decay smoother against observed site means");
  add_common(tune, ov);
  tune->callback([&] { action = spex::run_tune; });

  auto* fit = app.add_subcommand("fit", "run the MCMC sampler and persist chain traces");
  add_common(fit, ov);
  fit->callback([&] { action = spex::run_fit; });

  auto* diagnose = app.add_subcommand("diagnose",
                                      "convergence diagnostics and posterior summaries");
  add_common(diagnose, ov);
  diagnose->callback([&] { action = spex::run_diagnose; });

  auto* predict = app.add_subcommand("predict", "posterior prediction surfaces on the grid");
  add_common(predict, ov);
  predict->callback([&] { action = spex::run_predict; });

  auto* simulate = app.add_subcommand("simulate",
                                      "generate synthetic observations with a ground-truth sidecar");
  add_common(simulate, ov);
  simulate->callback([&] { action = spex::run_simulate; });

  CLI11_PARSE(app, argc, argv);

  try {
    action(resolve(ov));
  } catch (const spex::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const spex::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
