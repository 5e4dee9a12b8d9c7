// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "driftbench/common/rng.hpp"

namespace driftbench::theory {

/// Standard normal draw (Box–Muller on two uniforms).
double normal(Rng& rng);
Eigen::VectorXd random_unit_vector(std::size_t dim, Rng& rng);
/// Q·diag(eigs)·Qᵀ with Q a random orthogonal matrix.
Eigen::MatrixXd random_spd(const Eigen::VectorXd& eigs, Rng& rng);

/// F(Θ) = ½(Θ−c)ᵀH(Θ−c) with F* = 0 at Θ = c, observed through drifting
/// gradients ∇𝓛^(t)(Θ) = ∇F(Θ) + δ_t·u, δ_t = δ₀·ρ^t, ‖u‖ = 1.
struct DriftingQuadratic {
  Eigen::MatrixXd H;
  Eigen::VectorXd center;
  Eigen::VectorXd drift_dir;
  double delta0 = 0.0;
  double rho = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(center.size()); }
  double mu() const;
  double L() const;
  double delta(std::size_t t) const;
  double F(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd grad_F(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd grad_t(const Eigen::VectorXd& theta, std::size_t t) const;

  /// Eigenvalues uniform in [eig_lo, eig_hi], random center and drift direction.
  static DriftingQuadratic random(std::size_t dim, double delta0, double rho, Rng& rng, double eig_lo = 0.2,
                                  double eig_hi = 2.0);
};

}  // namespace driftbench::theory
