// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <stdexcept>

#include "spex/fem.hpp"

namespace spex {

// Matern field parameters: kappa is the inverse-range (1/km), omega scales
// the precision. Range rho = sqrt(8)/kappa (smoothness nu = 1) and marginal
// standard deviation approx 1/(sqrt(4 pi) kappa omega).
struct SpdeParams {
  double kappa = 1.0;
  double omega = 1.0;
};

// GMRF precision of the Matern approximation with nu = 1:
//   Q = omega^2 (kappa^4 C + 2 kappa^2 G + G C^{-1} G)
// with the lumped (diagonal) mass matrix C, which keeps G C^{-1} G sparse.
inline Eigen::SparseMatrix<double> spde_precision(const FemMatrices& fem,
                                                  const SpdeParams& p) {
  if (!(p.kappa > 0.0) || !(p.omega > 0.0))
    throw std::domain_error("spde_precision: kappa and omega must be positive");
  const Eigen::VectorXd inv_mass = fem.mass_lumped.cwiseInverse();
  const Eigen::SparseMatrix<double>& g = fem.stiffness;
  Eigen::SparseMatrix<double> gcg = g * inv_mass.asDiagonal() * g;
  const double k2 = p.kappa * p.kappa;
  Eigen::SparseMatrix<double> mass(g.rows(), g.cols());
  mass.reserve(Eigen::VectorXi::Constant(static_cast<int>(g.cols()), 1));
  for (int i = 0; i < g.rows(); ++i) mass.insert(i, i) = fem.mass_lumped(i);
  mass.makeCompressed();
  Eigen::SparseMatrix<double> q = k2 * k2 * mass + 2.0 * k2 * g + gcg;
  // Enforce exact symmetry of the stored values (product round-off).
  Eigen::SparseMatrix<double> qt = q.transpose();
  q = 0.5 * (q + qt);
  q *= p.omega * p.omega;
  q.makeCompressed();
  return q;
}

}  // namespace spex
