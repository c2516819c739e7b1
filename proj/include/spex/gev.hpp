// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace spex {

// Generalized extreme value parameters. The scale is stored on log scale,
// so exp(tau) > 0 holds by construction.
struct GevParams {
  double mu = 0.0;   // location
  double tau = 0.0;  // log-scale
  double xi = 0.0;   // shape

  double scale() const { return std::exp(tau); }
};

inline constexpr double kGumbelSwitch = 1e-8;   // |xi| below which the Gumbel limit is used
inline constexpr double kXiDerivSwitch = 1e-5;  // switch for the xi-derivative expansions
inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

namespace detail {

inline void check_finite(double y, const GevParams& p) {
  if (!std::isfinite(y) || !std::isfinite(p.mu) || !std::isfinite(p.tau) ||
      !std::isfinite(p.xi))
    throw std::domain_error("gev: non-finite argument");
}

}  // namespace detail

// True iff 1 + xi*(y - mu)/exp(tau) > 0.
inline bool gev_in_support(double y, const GevParams& p) {
  const double z = (y - p.mu) * std::exp(-p.tau);
  return 1.0 + p.xi * z > 0.0;
}

inline double gev_logpdf(double y, const GevParams& p) {
  detail::check_finite(y, p);
  const double z = (y - p.mu) * std::exp(-p.tau);
  if (std::fabs(p.xi) < kGumbelSwitch)
    return -p.tau - z - std::exp(-z);
  const double t = 1.0 + p.xi * z;
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  const double log_t = std::log1p(p.xi * z);
  return -p.tau - (1.0 + 1.0 / p.xi) * log_t - std::exp(-log_t / p.xi);
}

inline double gev_cdf(double y, const GevParams& p) {
  detail::check_finite(y, p);
  const double z = (y - p.mu) * std::exp(-p.tau);
  if (std::fabs(p.xi) < kGumbelSwitch)
    return std::exp(-std::exp(-z));
  const double t = 1.0 + p.xi * z;
  if (t <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log1p(p.xi * z) / p.xi));
}

inline double gev_quantile(double prob, const GevParams& p) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("gev_quantile: probability must lie in (0, 1)");
  detail::check_finite(prob, p);
  const double llp = std::log(-std::log(prob));
  if (std::fabs(p.xi) < kGumbelSwitch)
    return p.mu - std::exp(p.tau) * llp;
  // ((-log p)^{-xi} - 1)/xi computed cancellation-free via expm1
  return p.mu + std::exp(p.tau) * std::expm1(-p.xi * llp) / p.xi;
}

inline double gev_mean(const GevParams& p) {
  detail::check_finite(0.0, p);
  if (p.xi >= 1.0)
    throw std::domain_error("gev_mean: mean does not exist for xi >= 1");
  if (std::fabs(p.xi) < kGumbelSwitch)
    return p.mu + std::exp(p.tau) * kEulerGamma;
  return p.mu + std::exp(p.tau) * (std::tgamma(1.0 - p.xi) - 1.0) / p.xi;
}

// Sum of gev_logpdf over the observed years at one site; -inf if any
// observation lies outside the support, 0 for an empty site.
inline double site_loglik(std::span<const double> y_site, const GevParams& p) {
  double total = 0.0;
  for (double y : y_site) {
    const double l = gev_logpdf(y, p);
    if (!std::isfinite(l)) return -std::numeric_limits<double>::infinity();
    total += l;
  }
  return total;
}

struct GradHess {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();   // d/d(mu, tau)
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

// Analytic gradient and Hessian of site_loglik with respect to (mu, tau) at
// fixed xi. With z = (y-mu)e^{-tau}, t = 1+xi z and g(t) = (xi+1)/t - t^{-1/xi-1}:
//   d l/d mu   = e^{-tau} g
//   d l/d tau  = -1 + z g
//   d2 l/d mu2     = -xi e^{-2 tau} g'
//   d2 l/d mu dtau = -e^{-tau} (g + xi z g')
//   d2 l/d tau2    = -z (g + xi z g')
// and the Gumbel limit replaces g -> 1-e^{-z}, xi g' -> e^{-z}.
inline GradHess site_loglik_grad_hess(std::span<const double> y_site, const GevParams& p) {
  GradHess out;
  const double inv_scale = std::exp(-p.tau);
  const bool gumbel = std::fabs(p.xi) < kGumbelSwitch;
  for (double y : y_site) {
    detail::check_finite(y, p);
    const double z = (y - p.mu) * inv_scale;
    double g, xig;  // g(t) and xi*z*g'(t)
    if (gumbel) {
      const double em = std::exp(-z);
      g = 1.0 - em;
      xig = z * em;
      out.hess(0, 0) += -inv_scale * inv_scale * em;
    } else {
      const double t = 1.0 + p.xi * z;
      if (t <= 0.0)
        throw std::domain_error("site_loglik_grad_hess: observation outside support");
      const double log_t = std::log1p(p.xi * z);
      const double e = std::exp(-log_t / p.xi);  // t^{-1/xi}
      g = ((p.xi + 1.0) - e) / t;
      const double gp = (-(p.xi + 1.0) + (1.0 / p.xi + 1.0) * e) / (t * t);
      xig = p.xi * z * gp;
      out.hess(0, 0) += -p.xi * inv_scale * inv_scale * gp;
    }
    out.grad(0) += inv_scale * g;
    out.grad(1) += -1.0 + z * g;
    out.hess(0, 1) += -inv_scale * (g + xig);
    out.hess(1, 1) += -z * (g + xig);
  }
  out.hess(1, 0) = out.hess(0, 1);
  return out;
}

// Total log-likelihood as a function of xi alone, summed over all sites.
inline double total_loglik_xi(const std::vector<std::vector<double>>& y,
                              const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
                              double xi) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double l = site_loglik(y[i], GevParams{mu(static_cast<Eigen::Index>(i)),
                                                 tau(static_cast<Eigen::Index>(i)), xi});
    if (!std::isfinite(l)) return -std::numeric_limits<double>::infinity();
    total += l;
  }
  return total;
}

// First and second derivative of the total log-likelihood with respect to xi.
// Direct expressions suffer catastrophic cancellation as xi -> 0, so below
// kXiDerivSwitch a series in xi (coefficients in z = (y-mu)e^{-tau}) is used.
inline std::pair<double, double> loglik_dxi_d2xi(const std::vector<std::vector<double>>& y,
                                                 const Eigen::VectorXd& mu,
                                                 const Eigen::VectorXd& tau, double xi) {
  if (!std::isfinite(xi)) throw std::domain_error("loglik_dxi_d2xi: non-finite xi");
  double d1 = 0.0, d2 = 0.0;
  const bool series = std::fabs(xi) < kXiDerivSwitch;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double inv_scale = std::exp(-tau(idx));
    for (double obs : y[i]) {
      const double z = (obs - mu(idx)) * inv_scale;
      if (series) {
        const double em = std::exp(-z);
        const double z2 = z * z, z3 = z2 * z, z4 = z3 * z, z5 = z4 * z, z6 = z5 * z;
        const double a0 = 0.5 * z2 * (1.0 - em) - z;
        const double a1 = z2 - (2.0 / 3.0) * z3 - em * (0.25 * z4 - (2.0 / 3.0) * z3);
        const double a2 = 0.75 * z4 - z3 - em * (0.75 * z4 - 0.5 * z5 + z6 / 16.0);
        d1 += a0 + a1 * xi + a2 * xi * xi;
        d2 += a1 + 2.0 * a2 * xi;
      } else {
        const double t = 1.0 + xi * z;
        if (t <= 0.0)
          throw std::domain_error("loglik_dxi_d2xi: observation outside support");
        const double log_t = std::log1p(xi * z);
        const double e = std::exp(-log_t / xi);  // t^{-1/xi}
        const double xi2 = xi * xi;
        const double zt = z / t;
        const double big_d = log_t / xi2 - zt / xi;
        d1 += -zt * (1.0 + 1.0 / xi) + log_t / xi2 - e * big_d;
        const double dd = zt / xi2 - 2.0 * log_t / (xi2 * xi) + z * (t + xi * z) / (xi2 * t * t);
        d2 += (1.0 + 1.0 / xi) * zt * zt + zt / xi2 + zt / xi2 - 2.0 * log_t / (xi2 * xi) -
              e * (big_d * big_d + dd);
      }
    }
  }
  return {d1, d2};
}

}  // namespace spex
