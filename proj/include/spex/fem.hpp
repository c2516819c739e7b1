// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <stdexcept>
#include <string>
#include <vector>

#include "spex/mesh.hpp"

namespace spex {

// Piecewise-linear finite element matrices on the mesh: row-sum lumped mass
// matrix (diagonal) and the stiffness matrix G with G_ij = Int grad(phi_i).grad(phi_j).
struct FemMatrices {
  Eigen::VectorXd mass_lumped;
  Eigen::SparseMatrix<double> stiffness;
};

inline FemMatrices assemble_fem(const MeshGeometry& mesh) {
  const int n = mesh.n_nodes();
  FemMatrices fem;
  fem.mass_lumped = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_triangles()) * 9);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const auto& t = mesh.triangles[static_cast<std::size_t>(k)];
    const double area = mesh.signed_area(k);
    if (!(area > 0.0))
      throw std::runtime_error("assemble_fem: degenerate triangle " + std::to_string(k));
    const double x[3] = {mesh.nodes(t[0], 0), mesh.nodes(t[1], 0), mesh.nodes(t[2], 0)};
    const double y[3] = {mesh.nodes(t[0], 1), mesh.nodes(t[1], 1), mesh.nodes(t[2], 1)};
    // grad(phi_i) = (b_i, c_i) / (2 area) with b_i = y_j - y_k, c_i = x_k - x_j
    double b[3], c[3];
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, l = (i + 2) % 3;
      b[i] = y[j] - y[l];
      c[i] = x[l] - x[j];
    }
    for (int i = 0; i < 3; ++i) {
      fem.mass_lumped(t[i]) += area / 3.0;
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(t[i], t[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
    }
  }
  fem.stiffness.resize(n, n);
  fem.stiffness.setFromTriplets(trips.begin(), trips.end());
  fem.stiffness.makeCompressed();
  return fem;
}

}  // namespace spex
