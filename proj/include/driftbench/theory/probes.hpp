// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "driftbench/theory/quadratic.hpp"

namespace driftbench::theory {

using AlphaSchedule = std::function<double(std::size_t t)>;

inline constexpr double kSlackTolerance = -1e-9;

struct PLProbeReport {
  std::size_t steps = 0;
  double mu = 0.0;
  double L = 0.0;
  /// F(Θ_t) − F* for t = 0..steps.
  std::vector<double> gaps;
  /// rhs − lhs of the contraction inequality, one per step.
  std::vector<double> slack;
  std::size_t violations = 0;
  double min_slack = 0.0;
};

/// Runs Θ_{t+1} = Θ_t − α(t)∇𝓛^(t)(Θ_t) and checks each step against
///   F(Θ_{t+1}) − F* ≤ (1 − μα)(F(Θ_t) − F*) + α·δ_t + (L/2)·α²·δ_t².
/// Throws ConfigError unless 0 < α(t) < 1/L for every t < steps.
PLProbeReport pl_contraction_probe(const DriftingQuadratic& q, const AlphaSchedule& alpha, std::size_t steps,
                                   const Eigen::VectorXd& theta0);

struct PLSuiteConfig {
  std::uint64_t seed = 1;
  std::size_t instances = 20;
  std::size_t dim_lo = 1;
  std::size_t dim_hi = 10;
  double delta0 = 0.1;
  double rho = 0.9;
  /// α = alpha_factor / L.
  double alpha_factor = 0.5;
  std::size_t steps = 500;
};

/// Random instances with dimension cycling through [dim_lo, dim_hi] and a
/// random start in [−2, 2]^d.
std::vector<PLProbeReport> pl_suite(const PLSuiteConfig& cfg);

/// 𝓛_t(Θ) = ½(Θ−Θ*_t)ᵀH(Θ−Θ*_t), minimum 0 at Θ*_t.
struct TrackingProblem {
  Eigen::MatrixXd H;
  std::function<Eigen::VectorXd(std::size_t t)> optimum;
  Eigen::VectorXd theta0;

  double loss(const Eigen::VectorXd& theta, std::size_t t) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& theta, std::size_t t) const;
};

/// Θ*_t = r·(cos φ_t·a + sin φ_t·b), φ_t = ln(1 + t), for orthonormal a, b:
/// the step length is about r/t, so CV_T grows like r·ln T. Θ₀ = 0.
TrackingProblem log_drift_problem(std::size_t dim, double radius, Rng& rng, double eig_lo = 0.5,
                                  double eig_hi = 2.0);

struct RegretReport {
  std::size_t T = 0;
  double alpha = 0.0;
  double R_T = 0.0;
  double CV_T = 0.0;
  /// max_t ‖Θ_t − Θ*_t‖.
  double D = 0.0;
  /// max_t ‖∇𝓛_t(Θ_t)‖.
  double G = 0.0;
  /// 𝓛_t(Θ_t) − 𝓛_t(Θ*_t) for t = 0..T−1.
  std::vector<double> gaps;
  /// R_t / t for t = 1..T.
  std::vector<double> avg_regret;
};

/// T steps of Θ_{t+1} = Θ_t − α∇𝓛_t(Θ_t). Throws ConfigError for T < 2 or α ≤ 0.
RegretReport dynamic_regret_run(const TrackingProblem& p, std::size_t T, double alpha);

/// Σ of the stored per-step gaps, in order.
double regret_from_gaps(const RegretReport& r);

/// Σ_t α(t)·G²/2 + D·CV_T / min_t α(t) over t < T.
double regret_bound_bracket(const RegretReport& r, const AlphaSchedule& alpha, double G);

/// Fitted constants of the order check; the fit validates growth order only.
struct RegretConstants {
  double C = 0.0;
  double C0 = 0.0;
};

/// R_T ≤ C·bracket + C₀.
bool regret_bound_check(const RegretReport& r, const AlphaSchedule& alpha, double G, const RegretConstants& k);

/// C = headroom · max_i R_i / bracket_i, C₀ = 0.
RegretConstants fit_regret_constants(const std::vector<RegretReport>& calibration, double headroom);

/// Calibration set: `instances` log-drift problems per horizon, α = 1/√T,
/// G measured by each run.
std::vector<RegretReport> regret_batch(std::uint64_t seed, std::size_t instances, std::size_t T);

struct ExpressivityTask {
  /// n × F feature matrix and n targets.
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
};

struct ExpressivityReport {
  std::size_t budget = 0;
  std::size_t episodes = 0;
  double static_worst_error = 0.0;
  double dynamic_worst_error = 0.0;
  std::vector<double> static_errors;
  std::vector<double> dynamic_errors;
};

/// Static: one least-squares fit on the first min(P, F) features shared by
/// all tasks. Dynamic: a separate fit per task on the first min(P/K, F)
/// features. Errors are per-task mean squared residuals; the report keeps
/// the worst task of each. Throws ConfigError for K < 2 or P % K ≠ 0.
ExpressivityReport expressivity_probe(const std::vector<ExpressivityTask>& tasks, std::size_t budget);

/// K tasks on shared inputs x ∈ [−1, 1]^n with features [x, x², …, x^F]
/// (F = budget); task k has targets in the span of its first P/K features
/// with random signed weights, so tasks disagree on identical inputs.
std::vector<ExpressivityTask> conflicting_tasks(std::size_t K, std::size_t budget, std::size_t n, Rng& rng);
/// K copies of one such task.
std::vector<ExpressivityTask> identical_tasks(std::size_t K, std::size_t budget, std::size_t n, Rng& rng);

}  // namespace driftbench::theory
