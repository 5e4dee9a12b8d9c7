// SPDX-License-Identifier: Apache-2.0
#include "driftbench/theory/quadratic.hpp"

#include <cmath>
#include <numbers>

namespace driftbench::theory {

double normal(Rng& rng) {
  // 1 − u keeps the logarithm finite.
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd random_unit_vector(std::size_t dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  do {
    for (std::size_t i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

Eigen::MatrixXd random_spd(const Eigen::VectorXd& eigs, Rng& rng) {
  const auto n = eigs.size();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::MatrixXd h = q * eigs.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

double DriftingQuadratic::mu() const { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff(); }

double DriftingQuadratic::L() const { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().maxCoeff(); }

double DriftingQuadratic::delta(std::size_t t) const { return delta0 * std::pow(rho, static_cast<double>(t)); }

double DriftingQuadratic::F(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd d = theta - center;
  return 0.5 * d.dot(H * d);
}

Eigen::VectorXd DriftingQuadratic::grad_F(const Eigen::VectorXd& theta) const { return H * (theta - center); }

Eigen::VectorXd DriftingQuadratic::grad_t(const Eigen::VectorXd& theta, std::size_t t) const {
  return grad_F(theta) + delta(t) * drift_dir;
}

DriftingQuadratic DriftingQuadratic::random(std::size_t dim, double delta0, double rho, Rng& rng, double eig_lo,
                                            double eig_hi) {
  DriftingQuadratic q;
  Eigen::VectorXd eigs(dim);
  for (std::size_t i = 0; i < dim; ++i) eigs[i] = rng.uniform(eig_lo, eig_hi);
  q.H = random_spd(eigs, rng);
  q.center = Eigen::VectorXd(dim);
  for (std::size_t i = 0; i < dim; ++i) q.center[i] = rng.uniform(-1.0, 1.0);
  q.drift_dir = random_unit_vector(dim, rng);
  q.delta0 = delta0;
  q.rho = rho;
  return q;
}

}  // namespace driftbench::theory
