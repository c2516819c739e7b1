// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spex/gev.hpp"
#include "spex/projection.hpp"
#include "spex/raster.hpp"
#include "spex/sampler.hpp"

namespace spex {

// Streaming mean/variance accumulator (Welford) per grid cell; avoids holding
// all posterior grid samples in memory.
class RunningMoments {
 public:
  explicit RunningMoments(Eigen::Index size)
      : count_(0), mean_(Eigen::VectorXd::Zero(size)), m2_(Eigen::VectorXd::Zero(size)) {}

  void add(const Eigen::VectorXd& x) {
    if (x.size() != mean_.size()) throw std::invalid_argument("RunningMoments: size mismatch");
    ++count_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  long count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }

  Eigen::VectorXd sd() const {
    if (count_ < 2) return Eigen::VectorXd::Zero(mean_.size());
    return (m2_ / static_cast<double>(count_ - 1)).cwiseMax(0.0).cwiseSqrt();
  }

 private:
  long count_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

// u_G = A_G u; cells outside the mesh become NaN.
inline Eigen::VectorXd project_field_sample(const Eigen::VectorXd& u, const Projection& a_g) {
  if (u.size() != a_g.matrix.cols())
    throw std::invalid_argument("project_field_sample: dimension mismatch");
  Eigen::VectorXd out = a_g.matrix * u;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (!a_g.inside[static_cast<std::size_t>(i)])
      out(i) = std::numeric_limits<double>::quiet_NaN();
  return out;
}

// mu_G = beta0 + beta1 * covariate + A_G u. The covariate column carries NaN
// for nodata cells, which propagates to the surface.
inline Eigen::VectorXd surface_sample(const Eigen::Vector2d& beta,
                                      const Eigen::VectorXd& covariate,
                                      const Eigen::VectorXd& u, const Projection& a_g) {
  if (covariate.size() != a_g.matrix.rows())
    throw std::invalid_argument("surface_sample: covariate length mismatch");
  Eigen::VectorXd out = project_field_sample(u, a_g);
  out += beta(0) * Eigen::VectorXd::Ones(covariate.size()) + beta(1) * covariate;
  return out;
}

// Per-cell GEV p-quantile for one posterior sample.
inline Eigen::VectorXd quantile_sample(const Eigen::VectorXd& mu_g,
                                       const Eigen::VectorXd& tau_g, double xi, double p) {
  Eigen::VectorXd out(mu_g.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::isnan(mu_g(i)) || std::isnan(tau_g(i)))
      out(i) = std::numeric_limits<double>::quiet_NaN();
    else
      out(i) = gev_quantile(p, {mu_g(i), tau_g(i), xi});
  }
  return out;
}

// Grid inputs for posterior surface prediction. The covariate columns hold
// the raster value (location) and its log (scale) per cell, NaN for nodata.
struct GridInputs {
  Projection a_g;
  Eigen::VectorXd covariate_mu;
  Eigen::VectorXd covariate_tau;
};

struct SurfaceStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  long n_samples = 0;
};

struct PredictionSurfaces {
  SurfaceStats u_mu, u_tau, mu, tau;
  std::vector<double> quantile_levels;
  std::vector<SurfaceStats> quantiles;  // aligned with quantile_levels
};

// Streams the post-burn-in samples of every chain through the projection and
// accumulates cellwise posterior means and standard deviations. Statistics of
// the quantile surfaces are computed per sample, never from summarized
// parameters.
inline PredictionSurfaces predict_surfaces(const std::vector<ChainTrace>& traces, long burnin,
                                           const GridInputs& grid,
                                           const std::vector<double>& quantile_levels) {
  if (traces.empty()) throw std::invalid_argument("predict_surfaces: no traces");
  const TraceLayout layout = traces[0].layout;
  const Eigen::Index cells = grid.covariate_mu.size();
  if (cells != grid.a_g.matrix.rows())
    throw std::invalid_argument("predict_surfaces: grid inputs disagree");
  for (double p : quantile_levels)
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("predict_surfaces: quantile levels must lie in (0, 1)");

  RunningMoments acc_u_mu(cells), acc_u_tau(cells), acc_mu(cells), acc_tau(cells);
  std::vector<RunningMoments> acc_q;
  for (std::size_t k = 0; k < quantile_levels.size(); ++k) acc_q.emplace_back(cells);

  Eigen::VectorXd u_mu(layout.n), u_tau(layout.n);
  for (const auto& trace : traces) {
    if (trace.aborted) continue;
    for (long row = burnin; row < trace.n_rows; ++row) {
      for (int i = 0; i < layout.n; ++i) {
        u_mu(i) = trace.value(row, layout.u_mu_at(i));
        u_tau(i) = trace.value(row, layout.u_tau_at(i));
      }
      const Eigen::Vector2d beta_mu(trace.value(row, layout.beta_mu_at(0)),
                                    trace.value(row, layout.beta_mu_at(1)));
      const Eigen::Vector2d beta_tau(trace.value(row, layout.beta_tau_at(0)),
                                     trace.value(row, layout.beta_tau_at(1)));
      const double xi = trace.value(row, layout.xi_at());
      const Eigen::VectorXd ug_mu = project_field_sample(u_mu, grid.a_g);
      const Eigen::VectorXd ug_tau = project_field_sample(u_tau, grid.a_g);
      const Eigen::VectorXd mu_g = surface_sample(beta_mu, grid.covariate_mu, u_mu, grid.a_g);
      const Eigen::VectorXd tau_g =
          surface_sample(beta_tau, grid.covariate_tau, u_tau, grid.a_g);
      acc_u_mu.add(ug_mu);
      acc_u_tau.add(ug_tau);
      acc_mu.add(mu_g);
      acc_tau.add(tau_g);
      for (std::size_t k = 0; k < quantile_levels.size(); ++k)
        acc_q[k].add(quantile_sample(mu_g, tau_g, xi, quantile_levels[k]));
    }
  }
  if (acc_mu.count() == 0)
    throw std::invalid_argument("predict_surfaces: no post-burn-in samples");

  const auto stats = [](const RunningMoments& acc) {
    return SurfaceStats{acc.mean(), acc.sd(), acc.count()};
  };
  PredictionSurfaces out;
  out.u_mu = stats(acc_u_mu);
  out.u_tau = stats(acc_u_tau);
  out.mu = stats(acc_mu);
  out.tau = stats(acc_tau);
  out.quantile_levels = quantile_levels;
  for (const auto& acc : acc_q) out.quantiles.push_back(stats(acc));
  return out;
}

// Packs a per-cell vector into a raster with the covariate grid's metadata;
// NaN cells become nodata.
inline Raster surface_to_raster(const Eigen::VectorXd& cells, const Raster& like) {
  if (cells.size() != static_cast<Eigen::Index>(like.values.size()))
    throw std::invalid_argument("surface_to_raster: cell count mismatch");
  Raster out = like;
  for (Eigen::Index i = 0; i < cells.size(); ++i)
    out.values[static_cast<std::size_t>(i)] = std::isnan(cells(i)) ? like.nodata : cells(i);
  return out;
}

}  // namespace spex
