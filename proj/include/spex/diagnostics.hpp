// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "spex/gev.hpp"
#include "spex/special.hpp"

namespace spex {

struct GelmanRubinResult {
  double rhat = 1.0;
  bool degenerate = false;
};

// Potential scale reduction factor in the between/within variance form:
// sqrt(((n-1)/n W + B/n) / W) over m chains of length n.
inline GelmanRubinResult gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw std::invalid_argument("gelman_rubin: need at least two chains");
  const std::size_t n = chains[0].size();
  if (n < 10) throw std::invalid_argument("gelman_rubin: chains too short");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("gelman_rubin: unequal chain lengths");

  std::vector<double> means(m), vars(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto& c = chains[s];
    means[s] = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
    double acc = 0.0;
    for (double v : c) acc += (v - means[s]) * (v - means[s]);
    vars[s] = acc / static_cast<double>(n - 1);
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b_over_n = 0.0;
  for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
  b_over_n /= static_cast<double>(m - 1);
  if (w <= 0.0) return {1.0, true};
  const double nn = static_cast<double>(n);
  const double vhat = (nn - 1.0) / nn * w + b_over_n;
  return {std::sqrt(vhat / w), false};
}

struct AcfResult {
  std::vector<double> acf;  // lags 0..max_lag, acf[0] = 1
  bool degenerate = false;
};

inline AcfResult autocorrelation(const std::vector<double>& series, int max_lag) {
  const std::size_t n = series.size();
  if (max_lag < 0 || n <= static_cast<std::size_t>(max_lag))
    throw std::invalid_argument("autocorrelation: series must be longer than max_lag");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  AcfResult out;
  out.acf.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
  out.acf[0] = 1.0;
  if (denom <= 0.0) {
    out.degenerate = true;
    return out;
  }
  for (int lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(lag) < n; ++t)
      acc += (series[t] - mean) * (series[t + static_cast<std::size_t>(lag)] - mean);
    out.acf[static_cast<std::size_t>(lag)] = acc / denom;
  }
  return out;
}

inline std::vector<double> running_mean(const std::vector<double>& series) {
  std::vector<double> out;
  out.reserve(series.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    acc += series[t];
    out.push_back(acc / static_cast<double>(t + 1));
  }
  return out;
}

// Effective sample size with Geyer's initial positive sequence truncation.
inline double effective_sample_size(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("effective_sample_size: series too short");
  const int max_lag = static_cast<int>(std::min<std::size_t>(n - 1, 2000));
  const AcfResult acf = autocorrelation(series, max_lag);
  if (acf.degenerate) return static_cast<double>(n);
  double sum = 0.0;
  for (int lag = 1; lag + 1 <= max_lag; lag += 2) {
    const double pair = acf.acf[static_cast<std::size_t>(lag)] +
                        acf.acf[static_cast<std::size_t>(lag) + 1];
    if (pair <= 0.0) break;
    sum += pair;
  }
  return static_cast<double>(n) / (1.0 + 2.0 * sum);
}

// Type-7 empirical quantile (linear interpolation) of a sorted sample.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_type7: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_type7: p outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

// Pools post-burn-in samples across chains and reports mean, sd and the
// 0.025/0.975 empirical quantiles.
inline ParamSummary summarize_pooled(const std::string& name,
                                     const std::vector<std::vector<double>>& chains,
                                     long burnin) {
  std::vector<double> pooled;
  for (const auto& c : chains) {
    if (static_cast<long>(c.size()) <= burnin)
      throw std::invalid_argument("summarize: no post-burn-in samples");
    pooled.insert(pooled.end(), c.begin() + burnin, c.end());
  }
  if (pooled.empty()) throw std::invalid_argument("summarize: no post-burn-in samples");
  ParamSummary s;
  s.name = name;
  s.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) /
           static_cast<double>(pooled.size());
  double acc = 0.0;
  for (double v : pooled) acc += (v - s.mean) * (v - s.mean);
  s.sd = pooled.size() > 1 ? std::sqrt(acc / static_cast<double>(pooled.size() - 1)) : 0.0;
  std::sort(pooled.begin(), pooled.end());
  s.q025 = quantile_type7(pooled, 0.025);
  s.q975 = quantile_type7(pooled, 0.975);
  return s;
}

struct CdfComparisonRow {
  double y = 0.0;
  double empirical = 0.0;  // i/n convention
  double model = 0.0;
};

// Sorted observations with empirical CDF (i/n) and the model CDF at the
// supplied (typically posterior mean) parameters.
inline std::vector<CdfComparisonRow> cdf_comparison(std::vector<double> y_site,
                                                    const GevParams& params) {
  std::sort(y_site.begin(), y_site.end());
  std::vector<CdfComparisonRow> rows;
  rows.reserve(y_site.size());
  const double n = static_cast<double>(y_site.size());
  for (std::size_t i = 0; i < y_site.size(); ++i)
    rows.push_back({y_site[i], static_cast<double>(i + 1) / n, gev_cdf(y_site[i], params)});
  return rows;
}

struct TrendTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double slope = 0.0;
};

// Likelihood ratio test of a Gaussian linear model for the residuals with and
// without a linear year term; the statistic is 2 * (loglik1 - loglik0) =
// n log(RSS0 / RSS1), chi-squared with 1 degree of freedom under the null.
inline TrendTestResult trend_lrt(const std::vector<double>& residuals,
                                 const std::vector<int>& years) {
  const std::size_t n = residuals.size();
  if (n != years.size()) throw std::invalid_argument("trend_lrt: input lengths differ");
  std::vector<int> distinct = years;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw std::invalid_argument("trend_lrt: need at least 3 distinct years");

  const double nn = static_cast<double>(n);
  double my = std::accumulate(residuals.begin(), residuals.end(), 0.0) / nn;
  double mx = 0.0;
  for (int t : years) mx += t;
  mx /= nn;
  double sxx = 0.0, sxy = 0.0, rss0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(years[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (residuals[i] - my);
    rss0 += (residuals[i] - my) * (residuals[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double rss1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = my + slope * (static_cast<double>(years[i]) - mx);
    rss1 += (residuals[i] - fit) * (residuals[i] - fit);
  }
  TrendTestResult out;
  out.slope = slope;
  if (rss1 <= 0.0 || rss0 <= 0.0) {
    out.statistic = rss0 > rss1 ? std::numeric_limits<double>::infinity() : 0.0;
    out.p_value = rss0 > rss1 ? 0.0 : 1.0;
    return out;
  }
  out.statistic = std::max(0.0, nn * std::log(rss0 / rss1));
  out.p_value = chi_squared_sf(out.statistic, 1.0);
  return out;
}

}  // namespace spex
