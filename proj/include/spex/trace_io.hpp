// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spex/observations.hpp"
#include "spex/sampler.hpp"

namespace spex {

// Reads a chain CSV written by run_chains: an `iteration` column followed by
// the fixed trace layout.
inline ChainTrace read_chain_csv(const std::filesystem::path& path, int n_sites, int n_nodes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("trace: cannot open " + path.string());
  ChainTrace trace;
  trace.layout = {n_sites, n_nodes};
  const auto expected = trace.layout.column_names();
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trace: empty file " + path.string());
  {
    std::istringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, ',') || field != "iteration")
      throw ValidationError("trace: first column must be 'iteration' in " + path.string());
    for (const auto& name : expected) {
      if (!std::getline(ss, field, ',') || field != name)
        throw ValidationError("trace: column mismatch in " + path.string() +
                              " (expected '" + name + "')");
    }
  }
  const int cols = trace.layout.cols();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // iteration index
    for (int c = 0; c < cols; ++c) {
      if (!std::getline(ss, field, ','))
        throw ValidationError("trace: short row in " + path.string());
      trace.data.push_back(std::stod(field));
    }
    ++trace.n_rows;
  }
  if (trace.n_rows == 0) throw ValidationError("trace: no rows in " + path.string());
  return trace;
}

// Sidecar metadata for a fitted chain set.
inline void write_fit_metadata(const std::filesystem::path& path, const SamplerConfig& config,
                               const std::vector<ChainTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw ValidationError("trace: cannot write " + path.string());
  out << "n_iter=" << config.n_iter << "\n";
  out << "n_burnin=" << config.n_burnin << "\n";
  out << "n_chains=" << config.n_chains << "\n";
  out << "seed=" << config.seed << "\n";
  out << "scale_bound=" << config.scale_bound << "\n";
  out << "thin=" << config.thin << "\n";
  char buf[64];
  for (std::size_t c = 0; c < traces.size(); ++c) {
    const auto& t = traces[c];
    const std::string pre = "chain_" + std::to_string(c) + "_";
    out << pre << "seed=" << t.seed << "\n";
    out << pre << "aborted=" << (t.aborted ? 1 : 0) << "\n";
    if (t.aborted) out << pre << "abort_reason=" << t.abort_reason << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", t.accept.eta_rate());
    out << pre << "accept_eta=" << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", t.accept.xi_rate());
    out << pre << "accept_xi=" << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", t.accept.nu_theta_rate());
    out << pre << "accept_nu_theta=" << buf << "\n";
    out << pre << "eta_mode_failures=" << t.accept.eta_mode_failures << "\n";
    out << pre << "xi_variance_failures=" << t.accept.xi_variance_failures << "\n";
    out << pre << "factor_failures=" << t.accept.nu_theta_factor_failures << "\n";
  }
}

}  // namespace spex
