// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spex/raster.hpp"

namespace spex {

// Thrown for malformed inputs and configuration; maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for unrecoverable numeric failures; maps to CLI exit code 2.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SiteInfo {
  std::string id;
  Point2 location;
};

// Per-site annual maxima. Missing (site, year) pairs are simply absent; the
// observed year sets may differ across sites.
struct ObservationTable {
  std::vector<std::string> site_ids;                    // insertion order
  std::map<std::string, std::vector<std::pair<int, double>>> records;  // year, value

  int n_sites() const { return static_cast<int>(site_ids.size()); }

  std::size_t n_observations() const {
    std::size_t n = 0;
    for (const auto& [id, rec] : records) n += rec.size();
    return n;
  }

  const std::vector<std::pair<int, double>>& site(const std::string& id) const {
    auto it = records.find(id);
    if (it == records.end()) throw ValidationError("observations: unknown site '" + id + "'");
    return it->second;
  }

  void add(const std::string& id, int year, double value, long line_no) {
    if (!std::isfinite(value) || value <= 0.0)
      throw ValidationError("observations: nonpositive or non-finite value at line " +
                            std::to_string(line_no));
    auto [it, inserted] = records.try_emplace(id);
    if (inserted) site_ids.push_back(id);
    auto& rec = it->second;
    for (const auto& [y, v] : rec)
      if (y == year)
        throw ValidationError("observations: duplicate (site, year) = (" + id + ", " +
                              std::to_string(year) + ") at line " + std::to_string(line_no));
    rec.emplace_back(year, value);
  }

  void sort_years() {
    for (auto& [id, rec] : records)
      std::sort(rec.begin(), rec.end());
  }

  // CSV with header `site_id,year,value_mm`.
  static ObservationTable read_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace detail

inline ObservationTable ObservationTable::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("observations: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                     std::vector<std::string>{"site_id", "year", "value_mm"})
    throw ValidationError("observations: expected header 'site_id,year,value_mm' in " +
                          path.string());
  ObservationTable table;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ValidationError("observations: expected 3 fields at line " +
                            std::to_string(line_no));
    try {
      table.add(fields[0], std::stoi(fields[1]), std::stod(fields[2]), line_no);
    } catch (const std::invalid_argument&) {
      throw ValidationError("observations: unparsable number at line " +
                            std::to_string(line_no));
    }
  }
  table.sort_years();
  return table;
}

inline void ObservationTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("observations: cannot write " + path.string());
  out << "site_id,year,value_mm\n";
  char buf[32];
  for (const auto& id : site_ids)
    for (const auto& [year, value] : records.at(id)) {
      std::snprintf(buf, sizeof buf, "%.17g", value);
      out << id << "," << year << "," << buf << "\n";
    }
}

// Sites CSV with header `site_id,x,y` (km coordinates).
inline std::vector<SiteInfo> read_sites_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("sites: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      detail::split_csv_line(line) != std::vector<std::string>{"site_id", "x", "y"})
    throw ValidationError("sites: expected header 'site_id,x,y' in " + path.string());
  std::vector<SiteInfo> sites;
  std::set<std::string> seen;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ValidationError("sites: expected 3 fields at line " + std::to_string(line_no));
    if (!seen.insert(fields[0]).second)
      throw ValidationError("sites: duplicate site_id '" + fields[0] + "'");
    try {
      sites.push_back({fields[0], {std::stod(fields[1]), std::stod(fields[2])}});
    } catch (const std::invalid_argument&) {
      throw ValidationError("sites: unparsable coordinate at line " + std::to_string(line_no));
    }
  }
  if (sites.empty()) throw ValidationError("sites: no sites in " + path.string());
  return sites;
}

inline void write_sites_csv(const std::filesystem::path& path,
                            const std::vector<SiteInfo>& sites) {
  std::ofstream out(path);
  if (!out) throw ValidationError("sites: cannot write " + path.string());
  out << "site_id,x,y\n";
  char buf[64];
  for (const auto& s : sites) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", s.location.x, s.location.y);
    out << s.id << "," << buf << "\n";
  }
}

// Observation values per site in the order of `sites`; sites absent from the
// table get empty sets. Observations at unknown sites are rejected.
inline std::vector<std::vector<double>> align_observations(
    const ObservationTable& table, const std::vector<SiteInfo>& sites) {
  std::set<std::string> known;
  for (const auto& s : sites) known.insert(s.id);
  for (const auto& id : table.site_ids)
    if (!known.count(id))
      throw ValidationError("observations: site '" + id + "' missing from the sites file");
  std::vector<std::vector<double>> y;
  y.reserve(sites.size());
  for (const auto& s : sites) {
    std::vector<double> vals;
    auto it = table.records.find(s.id);
    if (it != table.records.end())
      for (const auto& [year, value] : it->second) vals.push_back(value);
    y.push_back(std::move(vals));
  }
  return y;
}

}  // namespace spex
