// Copyright (c) 2026 the spex authors
//
// Licensed under the Apache License, Version 2.0. See LICENSE in the project
// root for license information.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spex/rng.hpp"

namespace spex {

// Reusable sparse LDL^T factorization of a symmetric positive definite
// precision matrix. The fill-reducing ordering is computed on the first
// factorize() and reused, so repeated calls must keep the sparsity pattern.
class SparseCholesky {
 public:
  bool factorize(const Eigen::SparseMatrix<double>& q) {
    if (!analyzed_) {
      solver_.analyzePattern(q);
      analyzed_ = true;
    }
    solver_.factorize(q);
    ok_ = solver_.info() == Eigen::Success && (solver_.vectorD().array() > 0.0).all();
    dim_ = static_cast<int>(q.rows());
    return ok_;
  }

  bool ok() const { return ok_; }
  int dim() const { return dim_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    require_ok();
    return solver_.solve(b);
  }

  double log_det() const {
    require_ok();
    return solver_.vectorD().array().log().sum();
  }

  // Draw from N(Q^{-1} b, Q^{-1}): x = Q^{-1} b + Pinv L^{-T} D^{-1/2} z.
  Eigen::VectorXd sample_canonical(const Eigen::VectorXd& b, Rng& rng) const {
    require_ok();
    Eigen::VectorXd z(dim_);
    for (int i = 0; i < dim_; ++i) z(i) = rng.normal();
    z.array() /= solver_.vectorD().array().sqrt();
    const Eigen::VectorXd w = solver_.matrixU().solve(z);
    Eigen::VectorXd x = solver_.permutationPinv() * w;
    if (b.size() > 0) x += solver_.solve(b);
    return x;
  }

 private:
  void require_ok() const {
    if (!ok_) throw std::runtime_error("SparseCholesky: matrix is not positive definite");
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool analyzed_ = false;
  bool ok_ = false;
  int dim_ = 0;
};

// Draw from the canonical-form Gaussian N(Q^{-1} b, Q^{-1}).
inline Eigen::VectorXd sample_gmrf(const Eigen::SparseMatrix<double>& q,
                                   const Eigen::VectorXd& b, Rng& rng) {
  SparseCholesky chol;
  if (!chol.factorize(q))
    throw std::runtime_error("sample_gmrf: precision matrix is not positive definite");
  return chol.sample_canonical(b, rng);
}

// log N(x; mean, Q^{-1}) with the determinant taken from an existing factor
// of Q; the quadratic form uses Q directly.
inline double gaussian_logdensity(const SparseCholesky& factor,
                                  const Eigen::SparseMatrix<double>& q,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& mean) {
  if (x.size() != q.rows() || mean.size() != q.rows())
    throw std::invalid_argument("gaussian_logdensity: dimension mismatch");
  const Eigen::VectorXd d = x - mean;
  const double quad = d.dot(q * d);
  const double n = static_cast<double>(q.rows());
  return 0.5 * factor.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * quad;
}

inline double gaussian_logdensity(const Eigen::SparseMatrix<double>& q,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& mean) {
  SparseCholesky chol;
  if (!chol.factorize(q))
    throw std::runtime_error("gaussian_logdensity: precision matrix is not positive definite");
  return gaussian_logdensity(chol, q, x, mean);
}

}  // namespace spex
