// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spex {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Regular grid in ESRI ASCII layout: values stored row-major with the first
// row at the top (largest y). Coordinates are in km to match the mesh.
struct Raster {
  int ncols = 0;
  int nrows = 0;
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;
  std::vector<double> values;

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * ncols + col]; }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * ncols + col];
  }
  bool is_nodata(double v) const { return !std::isfinite(v) || v == nodata; }

  Point2 cell_center(int row, int col) const {
    return {xllcorner + (col + 0.5) * cellsize,
            yllcorner + (nrows - row - 0.5) * cellsize};
  }

  double width() const { return ncols * cellsize; }
  double height() const { return nrows * cellsize; }

  // Row/col of the cell containing a point; false if outside the raster.
  bool locate(Point2 p, int& row, int& col) const {
    const double fx = (p.x - xllcorner) / cellsize;
    const double fy = (p.y - yllcorner) / cellsize;
    if (fx < 0.0 || fy < 0.0 || fx >= ncols || fy >= nrows) return false;
    col = static_cast<int>(fx);
    row = nrows - 1 - static_cast<int>(fy);
    return true;
  }

  static Raster read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

inline Raster Raster::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("raster: cannot open " + path.string());
  Raster r;
  bool have_nodata = false;
  int header_lines = 5;
  std::string key;
  // Five mandatory header fields, optional NODATA_value as a sixth.
  for (int i = 0; i < header_lines; ++i) {
    double value;
    if (!(in >> key >> value))
      throw std::runtime_error("raster: malformed header in " + path.string());
    std::string k;
    for (char c : key) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (k == "ncols") r.ncols = static_cast<int>(value);
    else if (k == "nrows") r.nrows = static_cast<int>(value);
    else if (k == "xllcorner") r.xllcorner = value;
    else if (k == "yllcorner") r.yllcorner = value;
    else if (k == "cellsize") r.cellsize = value;
    else if (k == "nodata_value") { r.nodata = value; have_nodata = true; }
    else throw std::runtime_error("raster: unknown header key '" + key + "'");
  }
  // Peek for NODATA_value after the mandatory five.
  if (!have_nodata) {
    std::streampos pos = in.tellg();
    std::string k;
    if (in >> k) {
      std::string lower;
      for (char c : k) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (lower == "nodata_value") {
        if (!(in >> r.nodata)) throw std::runtime_error("raster: bad NODATA_value");
      } else {
        in.seekg(pos);
      }
    }
    in.clear();
  }
  if (r.ncols <= 0 || r.nrows <= 0 || !(r.cellsize > 0.0))
    throw std::runtime_error("raster: invalid dimensions in " + path.string());
  const std::size_t n = static_cast<std::size_t>(r.ncols) * r.nrows;
  r.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> r.values[i]))
      throw std::runtime_error("raster: expected " + std::to_string(n) + " values in " +
                               path.string());
  }
  return r;
}

inline void Raster::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("raster: cannot write " + path.string());
  char buf[64];
  out << "ncols " << ncols << "\n";
  out << "nrows " << nrows << "\n";
  std::snprintf(buf, sizeof buf, "%.10g", xllcorner);
  out << "xllcorner " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.10g", yllcorner);
  out << "yllcorner " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.10g", cellsize);
  out << "cellsize " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.10g", nodata);
  out << "NODATA_value " << buf << "\n";
  for (int row = 0; row < nrows; ++row) {
    for (int col = 0; col < ncols; ++col) {
      const double v = at(row, col);
      std::snprintf(buf, sizeof buf, "%.10g", std::isfinite(v) ? v : nodata);
      out << buf << (col + 1 == ncols ? "" : " ");
    }
    out << "\n";
  }
}

}  // namespace spex
