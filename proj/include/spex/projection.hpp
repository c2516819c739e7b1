// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "spex/mesh.hpp"
#include "spex/raster.hpp"

namespace spex {

// Sparse barycentric projection from mesh nodes onto arbitrary points.
// Each row has at most 3 nonzeros in [0, 1]; rows of points inside the mesh
// sum to one, rows of outside points are zero and flagged.
struct Projection {
  Eigen::SparseMatrix<double> matrix;
  std::vector<std::uint8_t> inside;

  int n_outside() const {
    int k = 0;
    for (auto f : inside) k += (f == 0);
    return k;
  }
};

namespace detail {

// Uniform bucket grid over triangle bounding boxes for point location.
class TriangleLocator {
 public:
  explicit TriangleLocator(const MeshGeometry& mesh) : mesh_(mesh) {
    min_x_ = mesh.nodes.col(0).minCoeff();
    max_x_ = mesh.nodes.col(0).maxCoeff();
    min_y_ = mesh.nodes.col(1).minCoeff();
    max_y_ = mesh.nodes.col(1).maxCoeff();
    const int target = std::max(1, static_cast<int>(std::sqrt(mesh.n_triangles())));
    nx_ = ny_ = target;
    dx_ = std::max((max_x_ - min_x_) / nx_, 1e-12);
    dy_ = std::max((max_y_ - min_y_) / ny_, 1e-12);
    buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int k = 0; k < mesh.n_triangles(); ++k) {
      const auto& t = mesh.triangles[static_cast<std::size_t>(k)];
      double bx0 = mesh.nodes(t[0], 0), bx1 = bx0, by0 = mesh.nodes(t[0], 1), by1 = by0;
      for (int v = 1; v < 3; ++v) {
        bx0 = std::min(bx0, mesh.nodes(t[v], 0));
        bx1 = std::max(bx1, mesh.nodes(t[v], 0));
        by0 = std::min(by0, mesh.nodes(t[v], 1));
        by1 = std::max(by1, mesh.nodes(t[v], 1));
      }
      for (int cy = cell_y(by0); cy <= cell_y(by1); ++cy)
        for (int cx = cell_x(bx0); cx <= cell_x(bx1); ++cx)
          buckets_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(k);
    }
  }

  // Barycentric coordinates of p in the containing triangle; -1 if outside.
  int locate(Point2 p, double lambda[3]) const {
    if (p.x < min_x_ - 1e-12 || p.x > max_x_ + 1e-12 || p.y < min_y_ - 1e-12 ||
        p.y > max_y_ + 1e-12)
      return -1;
    const auto& bucket = buckets_[static_cast<std::size_t>(cell_y(p.y)) * nx_ + cell_x(p.x)];
    for (int k : bucket)
      if (barycentric(k, p, lambda)) return k;
    return -1;
  }

 private:
  int cell_x(double x) const {
    return std::clamp(static_cast<int>((x - min_x_) / dx_), 0, nx_ - 1);
  }
  int cell_y(double y) const {
    return std::clamp(static_cast<int>((y - min_y_) / dy_), 0, ny_ - 1);
  }

  bool barycentric(int k, Point2 p, double lambda[3]) const {
    const auto& t = mesh_.triangles[static_cast<std::size_t>(k)];
    const double ax = mesh_.nodes(t[0], 0), ay = mesh_.nodes(t[0], 1);
    const double bx = mesh_.nodes(t[1], 0), by = mesh_.nodes(t[1], 1);
    const double cx = mesh_.nodes(t[2], 0), cy = mesh_.nodes(t[2], 1);
    const double det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    const double l1 = ((p.x - ax) * (cy - ay) - (cx - ax) * (p.y - ay)) / det;
    const double l2 = ((bx - ax) * (p.y - ay) - (p.x - ax) * (by - ay)) / det;
    const double l0 = 1.0 - l1 - l2;
    constexpr double tol = -1e-10;
    if (l0 < tol || l1 < tol || l2 < tol) return false;
    lambda[0] = std::max(l0, 0.0);
    lambda[1] = std::max(l1, 0.0);
    lambda[2] = std::max(l2, 0.0);
    const double sum = lambda[0] + lambda[1] + lambda[2];
    for (int i = 0; i < 3; ++i) lambda[i] /= sum;
    return true;
  }

  const MeshGeometry& mesh_;
  double min_x_, max_x_, min_y_, max_y_, dx_, dy_;
  int nx_, ny_;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace detail

inline Projection build_projection(const MeshGeometry& mesh, std::span<const Point2> points) {
  detail::TriangleLocator locator(mesh);
  Projection proj;
  proj.inside.assign(points.size(), 0);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(points.size() * 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double lambda[3];
    const int tri = locator.locate(points[i], lambda);
    if (tri < 0) continue;
    proj.inside[i] = 1;
    const auto& t = mesh.triangles[static_cast<std::size_t>(tri)];
    for (int v = 0; v < 3; ++v)
      if (lambda[v] > 0.0)
        trips.emplace_back(static_cast<int>(i), t[v], lambda[v]);
  }
  proj.matrix.resize(static_cast<int>(points.size()), mesh.n_nodes());
  proj.matrix.setFromTriplets(trips.begin(), trips.end());
  proj.matrix.makeCompressed();
  return proj;
}

}  // namespace spex
