// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spex/covariate.hpp"
#include "spex/diagnostics.hpp"
#include "spex/gev.hpp"
#include "spex/mesh.hpp"
#include "spex/model.hpp"
#include "spex/observations.hpp"
#include "spex/predict.hpp"
#include "spex/raster.hpp"
#include "spex/sampler.hpp"
#include "spex/simulate.hpp"
#include "spex/trace_io.hpp"

namespace spex {

inline constexpr const char* kVersion = "0.1.0";

// Batch-run configuration: flat key=value file, overridable by CLI flags.
struct RunConfig {
  std::filesystem::path observations;
  std::filesystem::path sites;
  std::filesystem::path covariate;
  std::filesystem::path mesh;
  std::filesystem::path out = "out";
  SamplerConfig sampler;
  std::vector<double> quantiles{0.95};
  // smoother used by `simulate` (and recorded for `fit`)
  double smoother_r = 0.0;      // 0 = two cell sizes
  double smoother_alpha = 2.0;
  // synthetic-data generation
  SimulationParams sim;

  void require_file(const std::filesystem::path& p, const std::string& role) const {
    if (p.empty()) throw ValidationError("config: missing path for " + role);
    if (!std::filesystem::exists(p))
      throw ValidationError("config: " + role + " file not found: " + p.string());
  }
};

namespace detail {

inline double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: cannot parse number '" + v + "' for key " + key);
  }
}

inline long to_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: cannot parse integer '" + v + "' for key " + key);
  }
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::to_double;
  using detail::to_long;
  if (key == "observations") cfg.observations = value;
  else if (key == "sites") cfg.sites = value;
  else if (key == "covariate") cfg.covariate = value;
  else if (key == "mesh") cfg.mesh = value;
  else if (key == "out") cfg.out = value;
  else if (key == "seed") cfg.sampler.seed = static_cast<std::uint64_t>(to_long(value, key));
  else if (key == "chains") cfg.sampler.n_chains = static_cast<int>(to_long(value, key));
  else if (key == "iters") cfg.sampler.n_iter = to_long(value, key);
  else if (key == "burnin") cfg.sampler.n_burnin = to_long(value, key);
  else if (key == "threads") cfg.sampler.threads = static_cast<int>(to_long(value, key));
  else if (key == "thin") cfg.sampler.thin = static_cast<int>(to_long(value, key));
  else if (key == "scale_bound") cfg.sampler.scale_bound = to_double(value, key);
  else if (key == "newton_tol") cfg.sampler.newton_tol = to_double(value, key);
  else if (key == "newton_max_steps")
    cfg.sampler.newton_max_steps = static_cast<int>(to_long(value, key));
  else if (key == "quantiles") {
    cfg.quantiles.clear();
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.quantiles.push_back(to_double(item, key));
  } else if (key == "smoother_r") cfg.smoother_r = to_double(value, key);
  else if (key == "smoother_alpha") cfg.smoother_alpha = to_double(value, key);
  else if (key == "sim_beta_mu_1") cfg.sim.beta_mu(0) = to_double(value, key);
  else if (key == "sim_beta_mu_2") cfg.sim.beta_mu(1) = to_double(value, key);
  else if (key == "sim_beta_tau_1") cfg.sim.beta_tau(0) = to_double(value, key);
  else if (key == "sim_beta_tau_2") cfg.sim.beta_tau(1) = to_double(value, key);
  else if (key == "sim_xi") cfg.sim.xi = to_double(value, key);
  else if (key == "sim_years") cfg.sim.n_years = static_cast<int>(to_long(value, key));
  else if (key == "sim_first_year") cfg.sim.first_year = static_cast<int>(to_long(value, key));
  else if (key == "sim_missing") cfg.sim.missing_fraction = to_double(value, key);
  else if (key == "sim_kappa_u_mu") cfg.sim.theta.kappa_u_mu = to_double(value, key);
  else if (key == "sim_omega_u_mu") cfg.sim.theta.omega_u_mu = to_double(value, key);
  else if (key == "sim_kappa_u_tau") cfg.sim.theta.kappa_u_tau = to_double(value, key);
  else if (key == "sim_omega_u_tau") cfg.sim.theta.omega_u_tau = to_double(value, key);
  else if (key == "sim_kappa_v_mu") cfg.sim.theta.kappa_v_mu = to_double(value, key);
  else if (key == "sim_kappa_v_tau") cfg.sim.theta.kappa_v_tau = to_double(value, key);
  else throw ValidationError("config: unknown key '" + key + "'");
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path.string());
  RunConfig cfg;
  cfg.sim.theta = HyperState::prior_median(PriorConstants{});
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: expected key=value at line " + std::to_string(line_no));
    apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

inline std::string resolved_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "observations=" << cfg.observations.string() << "\n";
  out << "sites=" << cfg.sites.string() << "\n";
  out << "covariate=" << cfg.covariate.string() << "\n";
  out << "mesh=" << cfg.mesh.string() << "\n";
  out << "out=" << cfg.out.string() << "\n";
  out << "seed=" << cfg.sampler.seed << "\n";
  out << "chains=" << cfg.sampler.n_chains << "\n";
  out << "iters=" << cfg.sampler.n_iter << "\n";
  out << "burnin=" << cfg.sampler.n_burnin << "\n";
  out << "threads=" << cfg.sampler.threads << "\n";
  out << "thin=" << cfg.sampler.thin << "\n";
  out << "scale_bound=" << num(cfg.sampler.scale_bound) << "\n";
  out << "newton_tol=" << num(cfg.sampler.newton_tol) << "\n";
  out << "newton_max_steps=" << cfg.sampler.newton_max_steps << "\n";
  out << "quantiles=";
  for (std::size_t i = 0; i < cfg.quantiles.size(); ++i)
    out << (i ? "," : "") << num(cfg.quantiles[i]);
  out << "\n";
  out << "smoother_r=" << num(cfg.smoother_r) << "\n";
  out << "smoother_alpha=" << num(cfg.smoother_alpha) << "\n";
  out << "sim_beta_mu_1=" << num(cfg.sim.beta_mu(0)) << "\n";
  out << "sim_beta_mu_2=" << num(cfg.sim.beta_mu(1)) << "\n";
  out << "sim_beta_tau_1=" << num(cfg.sim.beta_tau(0)) << "\n";
  out << "sim_beta_tau_2=" << num(cfg.sim.beta_tau(1)) << "\n";
  out << "sim_xi=" << num(cfg.sim.xi) << "\n";
  out << "sim_years=" << cfg.sim.n_years << "\n";
  out << "sim_first_year=" << cfg.sim.first_year << "\n";
  out << "sim_missing=" << num(cfg.sim.missing_fraction) << "\n";
  return out.str();
}

inline std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline void write_manifest(const RunConfig& cfg, const std::string& stage) {
  std::filesystem::create_directories(cfg.out);
  const std::string text = resolved_config_text(cfg);
  std::ofstream out(cfg.out / ("manifest_" + stage + ".txt"));
  if (!out) throw ValidationError("manifest: cannot write to " + cfg.out.string());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(text)));
  out << "stage=" << stage << "\n";
  out << "version=" << kVersion << "\n";
  out << "config_hash=" << buf << "\n";
  out << text;
}

// ---------------------------------------------------------------------------
// Shared ingestion helpers

struct LoadedInputs {
  Raster grid;
  std::vector<SiteInfo> sites;
  std::vector<Point2> site_points;
  ObservationTable observations;
  std::vector<std::vector<double>> y;  // aligned with sites
};

inline LoadedInputs load_site_inputs(const RunConfig& cfg, bool need_observations = true) {
  cfg.require_file(cfg.covariate, "covariate raster");
  cfg.require_file(cfg.sites, "sites");
  LoadedInputs in;
  in.grid = Raster::read(cfg.covariate);
  in.sites = read_sites_csv(cfg.sites);
  for (const auto& s : in.sites) in.site_points.push_back(s.location);
  if (need_observations) {
    cfg.require_file(cfg.observations, "observations");
    in.observations = ObservationTable::read_csv(cfg.observations);
    in.y = align_observations(in.observations, in.sites);
  }
  return in;
}

inline SmootherConfig read_smoother_artifact(const RunConfig& cfg) {
  const auto path = cfg.out / "smoother.txt";
  if (!std::filesystem::exists(path))
    throw ValidationError("fit: missing upstream artifact " + path.string() +
                          " (run tune-covariate or simulate first)");
  std::ifstream in(path);
  SmootherConfig sc;
  bool have_r = false, have_alpha = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "r") {
      sc.r = detail::to_double(value, key);
      have_r = true;
    } else if (key == "alpha") {
      sc.alpha = detail::to_double(value, key);
      have_alpha = true;
    }
  }
  if (!have_r || !have_alpha)
    throw ValidationError("fit: smoother artifact " + path.string() + " is incomplete");
  return sc;
}

inline void write_smoother_artifact(const RunConfig& cfg, const SmootherConfig& sc,
                                    double objective) {
  std::filesystem::create_directories(cfg.out);
  std::ofstream out(cfg.out / "smoother.txt");
  if (!out) throw ValidationError("cannot write smoother artifact");
  char buf[128];
  std::snprintf(buf, sizeof buf, "r=%.17g\nalpha=%.17g\nobjective=%.17g\n", sc.r, sc.alpha,
                objective);
  out << buf;
}

inline void write_site_covariates(const RunConfig& cfg, const LoadedInputs& in,
                                  const SmootherConfig& sc) {
  std::ofstream out(cfg.out / "site_covariates.csv");
  if (!out) throw ValidationError("cannot write site covariates");
  out << "site_id,x,y,smoothed_mean\n";
  char buf[128];
  for (const auto& s : in.sites) {
    const double v = smooth_at_site(in.grid, s.location, sc);
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g", s.id.c_str(), s.location.x,
                  s.location.y, v);
    out << buf << "\n";
  }
}

// Model assembly from loaded inputs and a smoother configuration.
inline ModelSpec assemble_model(const RunConfig& cfg, const LoadedInputs& in,
                                const SmootherConfig& sc, MeshGeometry* mesh_out = nullptr) {
  cfg.require_file(cfg.mesh, "mesh");
  MeshGeometry mesh = MeshGeometry::read(cfg.mesh);
  ModelSpec model;
  model.n_sites = static_cast<int>(in.sites.size());
  model.n_nodes = mesh.n_nodes();
  auto [x_mu, x_tau] = covariate_vectors(in.grid, in.site_points, sc);
  model.x_mu = x_mu;
  model.x_tau = x_tau;
  const Projection a_s = build_projection(mesh, in.site_points);
  if (a_s.n_outside() > 0)
    throw ValidationError("fit: " + std::to_string(a_s.n_outside()) +
                          " site(s) fall outside the mesh");
  model.a_s = a_s.matrix;
  model.fem = assemble_fem(mesh);
  model.validate();
  if (mesh_out) *mesh_out = std::move(mesh);
  return model;
}

// ---------------------------------------------------------------------------
// Stages

inline void run_tune(const RunConfig& cfg) {
  LoadedInputs in = load_site_inputs(cfg);
  std::vector<double> observed_means;
  for (const auto& s : in.sites) {
    const auto& rec = in.observations.records.count(s.id)
                          ? in.observations.site(s.id)
                          : std::vector<std::pair<int, double>>{};
    if (rec.empty())
      throw ValidationError("tune-covariate: site '" + s.id + "' has no observations");
    double mean = 0.0;
    for (const auto& [year, value] : rec) mean += value;
    observed_means.push_back(mean / static_cast<double>(rec.size()));
  }
  const TuneResult result = tune_smoother(in.grid, in.site_points, observed_means);
  std::filesystem::create_directories(cfg.out);
  write_smoother_artifact(cfg, {result.r, result.alpha}, result.objective);
  write_site_covariates(cfg, in, {result.r, result.alpha});
  write_manifest(cfg, "tune-covariate");
}

inline void run_fit(const RunConfig& cfg) {
  LoadedInputs in = load_site_inputs(cfg);
  const SmootherConfig sc = read_smoother_artifact(cfg);
  const ModelSpec model = assemble_model(cfg, in, sc);
  std::filesystem::create_directories(cfg.out);
  const std::filesystem::path out_dir = cfg.out;
  const auto traces = run_chains(cfg.sampler, model, in.y, &out_dir);
  write_fit_metadata(cfg.out / "fit_meta.txt", cfg.sampler, traces);
  write_manifest(cfg, "fit");
  for (const auto& t : traces)
    if (t.aborted) throw NumericError("fit: chain aborted: " + t.abort_reason);
}

inline std::vector<ChainTrace> load_traces(const RunConfig& cfg, const ModelSpec& model) {
  std::vector<ChainTrace> traces;
  for (int c = 0; c < cfg.sampler.n_chains; ++c) {
    const auto path = cfg.out / ("chain_" + std::to_string(c) + ".csv");
    if (!std::filesystem::exists(path))
      throw ValidationError("missing upstream artifact " + path.string() + " (run fit first)");
    traces.push_back(read_chain_csv(path, model.n_sites, model.n_nodes));
  }
  return traces;
}

// Parameters reported individually (the non-spatially-varying set).
inline std::vector<std::pair<std::string, int>> scalar_params(const TraceLayout& layout) {
  return {{"beta_mu_1", layout.beta_mu_at(0)},   {"beta_mu_2", layout.beta_mu_at(1)},
          {"beta_tau_1", layout.beta_tau_at(0)}, {"beta_tau_2", layout.beta_tau_at(1)},
          {"xi", layout.xi_at()},                {"kappa_u_mu", layout.theta_at(0)},
          {"omega_u_mu", layout.theta_at(1)},    {"kappa_u_tau", layout.theta_at(2)},
          {"omega_u_tau", layout.theta_at(3)},   {"kappa_v_mu", layout.theta_at(4)},
          {"kappa_v_tau", layout.theta_at(5)}};
}

inline void run_diagnose(const RunConfig& cfg) {
  LoadedInputs in = load_site_inputs(cfg);
  const SmootherConfig sc = read_smoother_artifact(cfg);
  const ModelSpec model = assemble_model(cfg, in, sc);
  const auto traces = load_traces(cfg, model);
  const TraceLayout layout = traces[0].layout;
  const long burnin = cfg.sampler.n_burnin / cfg.sampler.thin;
  for (const auto& t : traces)
    if (t.n_rows <= burnin) throw ValidationError("diagnose: traces shorter than burn-in");

  const auto names = layout.column_names();
  char buf[160];
  // Summary (Table-1 style columns) and Gelman-Rubin for every parameter.
  std::ofstream summary(cfg.out / "summary.csv");
  summary << "parameter,q025,mean,q975,sd\n";
  std::ofstream gr_out(cfg.out / "gelman_rubin.csv");
  gr_out << "parameter,rhat,degenerate\n";
  for (int col = 0; col < layout.cols(); ++col) {
    std::vector<std::vector<double>> series;
    for (const auto& t : traces) series.push_back(t.column(col));
    const ParamSummary s = summarize_pooled(names[static_cast<std::size_t>(col)], series, burnin);
    std::snprintf(buf, sizeof buf, "%s,%.8g,%.8g,%.8g,%.8g", s.name.c_str(), s.q025, s.mean,
                  s.q975, s.sd);
    summary << buf << "\n";
    if (traces.size() >= 2 && traces[0].n_rows - burnin >= 10) {
      std::vector<std::vector<double>> post;
      for (auto& c : series) post.emplace_back(c.begin() + burnin, c.end());
      const GelmanRubinResult gr = gelman_rubin(post);
      std::snprintf(buf, sizeof buf, "%s,%.8g,%d", s.name.c_str(), gr.rhat,
                    gr.degenerate ? 1 : 0);
      gr_out << buf << "\n";
    }
  }

  // Per-parameter diagnostic series for external plotting.
  const auto diag_dir = cfg.out / "diag";
  std::filesystem::create_directories(diag_dir);
  std::ofstream ess_out(diag_dir / "ess.csv");
  ess_out << "parameter";
  for (std::size_t c = 0; c < traces.size(); ++c) ess_out << ",chain_" << c;
  ess_out << ",total\n";
  for (const auto& [name, col] : scalar_params(layout)) {
    ess_out << name;
    double total = 0.0;
    for (const auto& t : traces) {
      const auto series = t.column(col, burnin);
      const double ess = series.size() >= 10
                             ? effective_sample_size(series)
                             : static_cast<double>(series.size());
      std::snprintf(buf, sizeof buf, ",%.1f", ess);
      ess_out << buf;
      total += ess;
    }
    std::snprintf(buf, sizeof buf, ",%.1f", total);
    ess_out << buf << "\n";
  }
  for (const auto& [name, col] : scalar_params(layout)) {
    std::ofstream acf_out(diag_dir / ("acf_" + name + ".csv"));
    std::ofstream rm_out(diag_dir / ("running_mean_" + name + ".csv"));
    acf_out << "lag";
    rm_out << "iteration";
    for (std::size_t c = 0; c < traces.size(); ++c) {
      acf_out << ",chain_" << c;
      rm_out << ",chain_" << c;
    }
    acf_out << "\n";
    rm_out << "\n";
    std::vector<std::vector<double>> acfs, rms;
    long rows = 0;
    for (const auto& t : traces) {
      const auto series = t.column(col, burnin);
      const int max_lag = std::min<int>(60, static_cast<int>(series.size()) - 1);
      acfs.push_back(autocorrelation(series, max_lag).acf);
      rms.push_back(running_mean(series));
      rows = static_cast<long>(series.size());
    }
    for (std::size_t lag = 0; lag < acfs[0].size(); ++lag) {
      acf_out << lag;
      for (const auto& a : acfs)
        acf_out << "," << (lag < a.size() ? a[lag] : 0.0);
      acf_out << "\n";
    }
    for (long r = 0; r < rows; ++r) {
      rm_out << r;
      for (const auto& m : rms) rm_out << "," << m[static_cast<std::size_t>(r)];
      rm_out << "\n";
    }
  }

  // Empirical vs model CDF per site at posterior-mean parameters, and the
  // residual time-trend likelihood ratio test.
  std::vector<double> post_mu(static_cast<std::size_t>(model.n_sites));
  std::vector<double> post_tau(static_cast<std::size_t>(model.n_sites));
  double post_xi = 0.0;
  {
    std::vector<std::vector<double>> xi_series;
    for (const auto& t : traces) xi_series.push_back(t.column(layout.xi_at()));
    post_xi = summarize_pooled("xi", xi_series, burnin).mean;
    for (int i = 0; i < model.n_sites; ++i) {
      std::vector<std::vector<double>> mu_series, tau_series;
      for (const auto& t : traces) {
        mu_series.push_back(t.column(layout.mu_at(i)));
        tau_series.push_back(t.column(layout.tau_at(i)));
      }
      post_mu[static_cast<std::size_t>(i)] = summarize_pooled("mu", mu_series, burnin).mean;
      post_tau[static_cast<std::size_t>(i)] = summarize_pooled("tau", tau_series, burnin).mean;
    }
  }
  std::vector<double> residuals;
  std::vector<int> res_years;
  for (std::size_t i = 0; i < in.sites.size(); ++i) {
    const auto& rec = in.observations.records.count(in.sites[i].id)
                          ? in.observations.site(in.sites[i].id)
                          : std::vector<std::pair<int, double>>{};
    if (rec.empty()) continue;
    const GevParams p{post_mu[i], post_tau[i], post_xi};
    std::vector<double> ys;
    for (const auto& [year, value] : rec) {
      ys.push_back(value);
      residuals.push_back(value - gev_mean(p));
      res_years.push_back(year);
    }
    std::ofstream cdf_out(diag_dir / ("cdf_" + in.sites[i].id + ".csv"));
    cdf_out << "y,empirical,model\n";
    for (const auto& row : cdf_comparison(ys, p)) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g", row.y, row.empirical, row.model);
      cdf_out << buf << "\n";
    }
  }
  const TrendTestResult trend = trend_lrt(residuals, res_years);
  std::ofstream trend_out(cfg.out / "trend_test.txt");
  std::snprintf(buf, sizeof buf, "statistic=%.10g\np_value=%.10g\nslope=%.10g\n",
                trend.statistic, trend.p_value, trend.slope);
  trend_out << buf;
  write_manifest(cfg, "diagnose");
}

inline std::string format_level(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

inline void run_predict(const RunConfig& cfg) {
  LoadedInputs in = load_site_inputs(cfg, /*need_observations=*/false);
  const SmootherConfig sc = read_smoother_artifact(cfg);
  MeshGeometry mesh;
  const ModelSpec model = assemble_model(cfg, in, sc, &mesh);
  const auto traces = load_traces(cfg, model);
  const long burnin = cfg.sampler.n_burnin / cfg.sampler.thin;

  // At grid points the covariate is the raster cell value itself.
  const std::size_t n_cells = in.grid.values.size();
  std::vector<Point2> centers;
  centers.reserve(n_cells);
  for (int row = 0; row < in.grid.nrows; ++row)
    for (int col = 0; col < in.grid.ncols; ++col) centers.push_back(in.grid.cell_center(row, col));
  GridInputs grid;
  grid.a_g = build_projection(mesh, centers);
  grid.covariate_mu.resize(static_cast<Eigen::Index>(n_cells));
  grid.covariate_tau.resize(static_cast<Eigen::Index>(n_cells));
  for (std::size_t i = 0; i < n_cells; ++i) {
    const double v = in.grid.values[i];
    const bool ok = !in.grid.is_nodata(v);
    grid.covariate_mu(static_cast<Eigen::Index>(i)) =
        ok ? v : std::numeric_limits<double>::quiet_NaN();
    grid.covariate_tau(static_cast<Eigen::Index>(i)) =
        ok && v > 0.0 ? std::log(v) : std::numeric_limits<double>::quiet_NaN();
  }

  const PredictionSurfaces surfaces = predict_surfaces(traces, burnin, grid, cfg.quantiles);
  const auto save = [&](const Eigen::VectorXd& cells, const std::string& name) {
    surface_to_raster(cells, in.grid).write(cfg.out / (name + ".asc"));
  };
  save(surfaces.u_mu.mean, "u_mu_mean");
  save(surfaces.u_mu.sd, "u_mu_sd");
  save(surfaces.u_tau.mean, "u_tau_mean");
  save(surfaces.u_tau.sd, "u_tau_sd");
  save(surfaces.mu.mean, "mu_mean");
  save(surfaces.mu.sd, "mu_sd");
  save(surfaces.tau.mean, "tau_mean");
  save(surfaces.tau.sd, "tau_sd");
  for (std::size_t k = 0; k < surfaces.quantile_levels.size(); ++k) {
    const std::string level = format_level(surfaces.quantile_levels[k]);
    save(surfaces.quantiles[k].mean, "quantile_" + level + "_mean");
    save(surfaces.quantiles[k].sd, "quantile_" + level + "_sd");
  }
  write_manifest(cfg, "predict");
}

inline void run_simulate(const RunConfig& cfg) {
  LoadedInputs in = load_site_inputs(cfg, /*need_observations=*/false);
  SmootherConfig sc{cfg.smoother_r > 0.0 ? cfg.smoother_r : 2.0 * in.grid.cellsize,
                    cfg.smoother_alpha};
  MeshGeometry mesh;
  SimulationParams params = cfg.sim;
  params.seed = cfg.sampler.seed;
  std::filesystem::create_directories(cfg.out);
  write_smoother_artifact(cfg, sc, 0.0);
  RunConfig cfg_model = cfg;
  const ModelSpec model = assemble_model(cfg_model, in, sc, &mesh);
  const SimulationResult result = simulate_dataset(model, in.sites, params);
  result.observations.write_csv(cfg.out / "observations.csv");
  write_truth(cfg.out / "truth.txt", result.truth, in.sites);
  write_site_covariates(cfg, in, sc);
  write_manifest(cfg, "simulate");
}

}  // namespace spex
