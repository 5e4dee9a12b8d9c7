// SPDX-License-Identifier: Apache-2.0
#include "driftbench/theory/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftbench/common/errors.hpp"

namespace driftbench::theory {

PLProbeReport pl_contraction_probe(const DriftingQuadratic& q, const AlphaSchedule& alpha, std::size_t steps,
                                   const Eigen::VectorXd& theta0) {
  if (static_cast<std::size_t>(theta0.size()) != q.dim()) throw DimensionError("theta0 does not match the dimension");
  PLProbeReport r;
  r.steps = steps;
  r.mu = q.mu();
  r.L = q.L();
  for (std::size_t t = 0; t < steps; ++t) {
    const double a = alpha(t);
    if (!(a > 0.0) || !(a < 1.0 / r.L)) {
      throw ConfigError("step size " + std::to_string(a) + " at t=" + std::to_string(t) + " violates 0 < alpha < 1/L = " +
                        std::to_string(1.0 / r.L));
    }
  }
  Eigen::VectorXd theta = theta0;
  double gap = q.F(theta);
  r.gaps.push_back(gap);
  r.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < steps; ++t) {
    const double a = alpha(t);
    const double d = q.delta(t);
    theta -= a * q.grad_t(theta, t);
    const double next = q.F(theta);
    const double rhs = (1.0 - r.mu * a) * gap + a * d + 0.5 * r.L * a * a * d * d;
    const double s = rhs - next;
    r.slack.push_back(s);
    r.min_slack = std::min(r.min_slack, s);
    if (s < kSlackTolerance) ++r.violations;
    r.gaps.push_back(next);
    gap = next;
  }
  if (steps == 0) r.min_slack = 0.0;
  return r;
}

std::vector<PLProbeReport> pl_suite(const PLSuiteConfig& cfg) {
  if (cfg.dim_lo < 1 || cfg.dim_hi < cfg.dim_lo) throw ConfigError("pl suite needs 1 <= dim_lo <= dim_hi");
  Rng rng(cfg.seed);
  std::vector<PLProbeReport> out;
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const std::size_t dim = cfg.dim_lo + i % (cfg.dim_hi - cfg.dim_lo + 1);
    const DriftingQuadratic q = DriftingQuadratic::random(dim, cfg.delta0, cfg.rho, rng);
    Eigen::VectorXd theta0(dim);
    for (std::size_t k = 0; k < dim; ++k) theta0[k] = rng.uniform(-2.0, 2.0);
    const double alpha = cfg.alpha_factor / q.L();
    out.push_back(pl_contraction_probe(q, [alpha](std::size_t) { return alpha; }, cfg.steps, theta0));
  }
  return out;
}

double TrackingProblem::loss(const Eigen::VectorXd& theta, std::size_t t) const {
  const Eigen::VectorXd d = theta - optimum(t);
  return 0.5 * d.dot(H * d);
}

Eigen::VectorXd TrackingProblem::grad(const Eigen::VectorXd& theta, std::size_t t) const {
  return H * (theta - optimum(t));
}

TrackingProblem log_drift_problem(std::size_t dim, double radius, Rng& rng, double eig_lo, double eig_hi) {
  if (dim < 2) throw ConfigError("log_drift_problem needs dim >= 2");
  Eigen::VectorXd eigs(dim);
  for (std::size_t i = 0; i < dim; ++i) eigs[i] = rng.uniform(eig_lo, eig_hi);
  TrackingProblem p;
  p.H = random_spd(eigs, rng);
  const Eigen::VectorXd a = random_unit_vector(dim, rng);
  Eigen::VectorXd b = random_unit_vector(dim, rng);
  b -= b.dot(a) * a;
  b.normalize();
  p.optimum = [a, b, radius](std::size_t t) -> Eigen::VectorXd {
    const double phi = std::log1p(static_cast<double>(t));
    return radius * (std::cos(phi) * a + std::sin(phi) * b);
  };
  p.theta0 = Eigen::VectorXd::Zero(dim);
  return p;
}

RegretReport dynamic_regret_run(const TrackingProblem& p, std::size_t T, double alpha) {
  if (T < 2) throw ConfigError("regret horizon must be at least 2");
  if (!(alpha > 0.0)) throw ConfigError("regret step size must be positive");
  RegretReport r;
  r.T = T;
  r.alpha = alpha;
  Eigen::VectorXd theta = p.theta0;
  Eigen::VectorXd prev_star;
  for (std::size_t t = 0; t < T; ++t) {
    const Eigen::VectorXd star = p.optimum(t);
    if (t > 0) r.CV_T += (star - prev_star).norm();
    const Eigen::VectorXd d = theta - star;
    const Eigen::VectorXd g = p.H * d;
    const double gap = 0.5 * d.dot(g);
    r.gaps.push_back(gap);
    r.R_T += gap;
    r.avg_regret.push_back(r.R_T / static_cast<double>(t + 1));
    r.D = std::max(r.D, d.norm());
    r.G = std::max(r.G, g.norm());
    theta -= alpha * g;
    prev_star = star;
  }
  return r;
}

double regret_from_gaps(const RegretReport& r) {
  double s = 0.0;
  for (double g : r.gaps) s += g;
  return s;
}

double regret_bound_bracket(const RegretReport& r, const AlphaSchedule& alpha, double G) {
  double sum = 0.0;
  double min_alpha = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < r.T; ++t) {
    const double a = alpha(t);
    sum += a;
    min_alpha = std::min(min_alpha, a);
  }
  if (!(min_alpha > 0.0)) throw ConfigError("step sizes must be positive");
  return sum * G * G / 2.0 + r.D * r.CV_T / min_alpha;
}

bool regret_bound_check(const RegretReport& r, const AlphaSchedule& alpha, double G, const RegretConstants& k) {
  return r.R_T <= k.C * regret_bound_bracket(r, alpha, G) + k.C0;
}

RegretConstants fit_regret_constants(const std::vector<RegretReport>& calibration, double headroom) {
  if (calibration.empty()) throw ConfigError("calibration needs at least one run");
  double worst = 0.0;
  for (const RegretReport& r : calibration) {
    const double a = r.alpha;
    const double bracket = regret_bound_bracket(r, [a](std::size_t) { return a; }, r.G);
    worst = std::max(worst, r.R_T / bracket);
  }
  return {headroom * worst, 0.0};
}

std::vector<RegretReport> regret_batch(std::uint64_t seed, std::size_t instances, std::size_t T) {
  Rng rng(seed);
  std::vector<RegretReport> out;
  const double alpha = 1.0 / std::sqrt(static_cast<double>(T));
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t dim = 2 + static_cast<std::size_t>(rng.below(9));
    const double radius = rng.uniform(0.5, 2.0);
    out.push_back(dynamic_regret_run(log_drift_problem(dim, radius, rng), T, alpha));
  }
  return out;
}

}  // namespace driftbench::theory
