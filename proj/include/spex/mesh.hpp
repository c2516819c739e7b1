// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spex {

// Triangulation of the study domain. Node coordinates are in km. Triangles
// are stored counter-clockwise; read() reorients as needed.
struct MeshGeometry {
  Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> boundary;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int tri) const {
    const auto& t = triangles[static_cast<std::size_t>(tri)];
    const double ax = nodes(t[0], 0), ay = nodes(t[0], 1);
    const double bx = nodes(t[1], 0), by = nodes(t[1], 1);
    const double cx = nodes(t[2], 0), cy = nodes(t[2], 1);
    return 0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
  }

  // Orients all triangles counter-clockwise, then checks index ranges,
  // strictly positive areas and edge conformity.
  void validate();

  static MeshGeometry read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

inline void MeshGeometry::validate() {
  const int n = n_nodes();
  if (boundary.size() != static_cast<std::size_t>(n))
    throw std::runtime_error("mesh: boundary flag count does not match node count");
  std::map<std::pair<int, int>, int> edge_count;
  for (int k = 0; k < n_triangles(); ++k) {
    auto& t = triangles[static_cast<std::size_t>(k)];
    for (int v : t)
      if (v < 0 || v >= n)
        throw std::runtime_error("mesh: node index out of range in triangle " +
                                 std::to_string(k));
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw std::runtime_error("mesh: repeated node in triangle " + std::to_string(k));
    if (signed_area(k) < 0.0) std::swap(t[1], t[2]);
    if (!(signed_area(k) > 0.0))
      throw std::runtime_error("mesh: degenerate (zero-area) triangle " + std::to_string(k));
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (const auto& [edge, count] : edge_count)
    if (count > 2)
      throw std::runtime_error("mesh: non-conforming edge (" + std::to_string(edge.first) +
                               ", " + std::to_string(edge.second) + ") shared by " +
                               std::to_string(count) + " triangles");
}

// Plain-text format: header `nodes N triangles M`, N lines `x y boundary_flag`,
// M lines `i j k` with 0-based node indices.
inline MeshGeometry MeshGeometry::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mesh: cannot open " + path.string());
  std::string kw_nodes, kw_tris;
  long n = 0, m = 0;
  if (!(in >> kw_nodes >> n >> kw_tris >> m) || kw_nodes != "nodes" || kw_tris != "triangles")
    throw std::runtime_error("mesh: malformed header in " + path.string());
  if (n <= 0 || m < 0) throw std::runtime_error("mesh: invalid counts in " + path.string());
  MeshGeometry mesh;
  mesh.nodes.resize(n, 2);
  mesh.boundary.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    double x, y;
    int flag;
    if (!(in >> x >> y >> flag))
      throw std::runtime_error("mesh: bad node line " + std::to_string(i));
    mesh.nodes(i, 0) = x;
    mesh.nodes(i, 1) = y;
    mesh.boundary[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(flag != 0);
  }
  mesh.triangles.resize(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    auto& t = mesh.triangles[static_cast<std::size_t>(k)];
    if (!(in >> t[0] >> t[1] >> t[2]))
      throw std::runtime_error("mesh: bad triangle line " + std::to_string(k));
  }
  mesh.validate();
  return mesh;
}

inline void MeshGeometry::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("mesh: cannot write " + path.string());
  out << "nodes " << n_nodes() << " triangles " << n_triangles() << "\n";
  char buf[96];
  for (int i = 0; i < n_nodes(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d", nodes(i, 0), nodes(i, 1),
                  boundary[static_cast<std::size_t>(i)] ? 1 : 0);
    out << buf << "\n";
  }
  for (const auto& t : triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
}

// Structured triangulation of a rectangle: nx-by-ny nodes, two triangles per
// cell. Used for tests and synthetic studies; real domains ingest external
// meshes that extend beyond the region of interest.
inline MeshGeometry structured_rectangle(int nx, int ny, double x0, double y0,
                                         double width, double height) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("structured_rectangle: need nx, ny >= 2");
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("structured_rectangle: need positive extent");
  MeshGeometry mesh;
  mesh.nodes.resize(static_cast<long>(nx) * ny, 2);
  mesh.boundary.assign(static_cast<std::size_t>(nx) * ny, 0);
  const double dx = width / (nx - 1), dy = height / (ny - 1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const long id = static_cast<long>(j) * nx + i;
      mesh.nodes(id, 0) = x0 + i * dx;
      mesh.nodes(id, 1) = y0 + j * dy;
      if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1)
        mesh.boundary[static_cast<std::size_t>(id)] = 1;
    }
  mesh.triangles.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1) * 2);
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i, b = j * nx + i + 1;
      const int c = (j + 1) * nx + i, d = (j + 1) * nx + i + 1;
      mesh.triangles.push_back({a, b, d});
      mesh.triangles.push_back({a, d, c});
    }
  mesh.validate();
  return mesh;
}

}  // namespace spex
