// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spex/raster.hpp"
#include "spex/special.hpp"

namespace spex {

struct SmootherConfig {
  double r = 1.0;      // tuning radius (km)
  double alpha = 1.0;  // beta-distribution shape (both parameters equal)
};

// Linear indices (row * ncols + col) of all non-nodata cells whose centers
// lie within distance r of the site.
inline std::vector<int> neighbor_set(const Raster& grid, Point2 site, double r) {
  if (!(r > 0.0)) throw std::domain_error("neighbor_set: radius must be positive");
  std::vector<int> cells;
  // Candidate window in raster rows/cols around the site.
  const double cs = grid.cellsize;
  const int col_lo = std::max(0, static_cast<int>(std::floor((site.x - r - grid.xllcorner) / cs)));
  const int col_hi = std::min(grid.ncols - 1,
                              static_cast<int>(std::ceil((site.x + r - grid.xllcorner) / cs)));
  const int row_lo = std::max(
      0, static_cast<int>(std::floor((grid.yllcorner + grid.height() - site.y - r) / cs)) - 1);
  const int row_hi = std::min(
      grid.nrows - 1,
      static_cast<int>(std::ceil((grid.yllcorner + grid.height() - site.y + r) / cs)));
  const double r2 = r * r;
  for (int row = row_lo; row <= row_hi; ++row)
    for (int col = col_lo; col <= col_hi; ++col) {
      if (grid.is_nodata(grid.at(row, col))) continue;
      const Point2 c = grid.cell_center(row, col);
      const double dx = c.x - site.x, dy = c.y - site.y;
      if (dx * dx + dy * dy <= r2) cells.push_back(row * grid.ncols + col);
    }
  return cells;
}

// Decay weight 1 - F_alpha(d/r) with F_alpha the CDF of Beta(alpha, alpha).
inline double decay_weight(double d, double r, double alpha) {
  if (!(r > 0.0) || !(alpha > 0.0))
    throw std::domain_error("decay_weight: r and alpha must be positive");
  if (!(d >= 0.0) || d > r) throw std::domain_error("decay_weight: require 0 <= d <= r");
  return 1.0 - reg_inc_beta(alpha, alpha, d / r);
}

// Decay-weighted mean of the simulated means surrounding the site.
inline double smooth_at_site(const Raster& grid, Point2 site, const SmootherConfig& cfg) {
  const auto cells = neighbor_set(grid, site, cfg.r);
  if (cells.empty())
    throw std::runtime_error("smooth_at_site: no grid coverage within r=" +
                             std::to_string(cfg.r) + " of site (" + std::to_string(site.x) +
                             ", " + std::to_string(site.y) + ")");
  double wsum = 0.0, vsum = 0.0;
  for (int cell : cells) {
    const int row = cell / grid.ncols, col = cell % grid.ncols;
    const Point2 c = grid.cell_center(row, col);
    const double d = std::hypot(c.x - site.x, c.y - site.y);
    const double w = decay_weight(d, cfg.r, cfg.alpha);
    wsum += w;
    vsum += w * grid.at(row, col);
  }
  if (!(wsum > 0.0))
    throw std::runtime_error("smooth_at_site: all weights vanish at site (" +
                             std::to_string(site.x) + ", " + std::to_string(site.y) + ")");
  return vsum / wsum;
}

struct TuneResult {
  double r = 0.0;
  double alpha = 0.0;
  double objective = 0.0;
};

struct TuneSearch {
  int n_r = 25;        // log-spaced radii from r_lo to r_hi
  int n_alpha = 13;    // log-spaced shapes in [alpha_lo, alpha_hi]
  double alpha_lo = 0.25;
  double alpha_hi = 16.0;
  double r_lo = 0.0;   // 0 = one cellsize
  double r_hi = 0.0;   // 0 = quarter of the grid diagonal
  int refine_rounds = 2;
};

namespace detail {

inline double smoother_objective(const Raster& grid, std::span<const Point2> sites,
                                 std::span<const double> observed_means, double r,
                                 double alpha) {
  double obj = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double s = smooth_at_site(grid, sites[i], SmootherConfig{r, alpha});
    const double d = s - observed_means[i];
    obj += d * d;
  }
  return obj;
}

// Golden-section refinement of one coordinate on [lo, hi]; keeps the incumbent
// unless a strictly better point is found.
template <typename F>
void golden_refine(F&& f, double lo, double hi, double& x, double& fx) {
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double xm = fc < fd ? c : d;
  const double fm = std::min(fc, fd);
  if (fm < fx * (1.0 - 1e-12)) {
    x = xm;
    fx = fm;
  }
}

}  // namespace detail

// Minimizes the mean-square distance between smoothed simulated means and
// observed site means over (r, alpha): coarse log-spaced lattice search with
// ties broken toward smaller r then smaller alpha, followed by a local
// coordinate-descent refinement that only moves on strict improvement.
inline TuneResult tune_smoother(const Raster& grid, std::span<const Point2> sites,
                                std::span<const double> observed_means,
                                const TuneSearch& search = {}) {
  if (sites.empty() || sites.size() != observed_means.size())
    throw std::invalid_argument("tune_smoother: sites and observed means must align");
  const double r_lo = search.r_lo > 0.0 ? search.r_lo : grid.cellsize;
  const double diag = std::hypot(grid.width(), grid.height());
  const double r_hi = search.r_hi > 0.0 ? search.r_hi : 0.25 * diag;
  if (!(r_hi > r_lo)) throw std::invalid_argument("tune_smoother: empty radius range");

  std::vector<double> radii(static_cast<std::size_t>(search.n_r));
  for (int i = 0; i < search.n_r; ++i)
    radii[static_cast<std::size_t>(i)] =
        r_lo * std::pow(r_hi / r_lo, search.n_r == 1 ? 0.0 : double(i) / (search.n_r - 1));
  std::vector<double> alphas(static_cast<std::size_t>(search.n_alpha));
  for (int i = 0; i < search.n_alpha; ++i)
    alphas[static_cast<std::size_t>(i)] =
        search.alpha_lo * std::pow(search.alpha_hi / search.alpha_lo,
                                   search.n_alpha == 1 ? 0.0 : double(i) / (search.n_alpha - 1));

  TuneResult best;
  bool found = false;
  // Ascending loops + strict improvement keep the smallest (r, alpha) on ties.
  for (double r : radii)
    for (double alpha : alphas) {
      double obj;
      try {
        obj = detail::smoother_objective(grid, sites, observed_means, r, alpha);
      } catch (const std::runtime_error&) {
        continue;  // a site without coverage at this radius
      }
      if (!found || obj < best.objective) {
        best = {r, alpha, obj};
        found = true;
      }
    }
  if (!found)
    throw std::runtime_error("tune_smoother: no candidate radius covers every site");

  for (int round = 0; round < search.refine_rounds; ++round) {
    const auto obj_r = [&](double r) {
      try {
        return detail::smoother_objective(grid, sites, observed_means, r, best.alpha);
      } catch (const std::runtime_error&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    detail::golden_refine(obj_r, std::max(r_lo, best.r / 2.0), std::min(r_hi, best.r * 2.0),
                          best.r, best.objective);
    const auto obj_a = [&](double a) {
      return detail::smoother_objective(grid, sites, observed_means, best.r, a);
    };
    detail::golden_refine(obj_a, std::max(search.alpha_lo, best.alpha / 2.0),
                          std::min(search.alpha_hi, best.alpha * 2.0), best.alpha,
                          best.objective);
  }
  return best;
}

// Design matrix columns at the sites: X_mu = [1, xbar*], X_tau = [1, log xbar*].
inline std::pair<Eigen::MatrixX2d, Eigen::MatrixX2d> covariate_vectors(
    const Raster& grid, std::span<const Point2> sites, const SmootherConfig& cfg) {
  Eigen::MatrixX2d x_mu(static_cast<long>(sites.size()), 2);
  Eigen::MatrixX2d x_tau(static_cast<long>(sites.size()), 2);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double s = smooth_at_site(grid, sites[i], cfg);
    if (!(s > 0.0))
      throw std::runtime_error("covariate_vectors: nonpositive smoothed value at site (" +
                               std::to_string(sites[i].x) + ", " + std::to_string(sites[i].y) +
                               ")");
    const auto idx = static_cast<long>(i);
    x_mu(idx, 0) = 1.0;
    x_mu(idx, 1) = s;
    x_tau(idx, 0) = 1.0;
    x_tau(idx, 1) = std::log(s);
  }
  return {x_mu, x_tau};
}

}  // namespace spex
