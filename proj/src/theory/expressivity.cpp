// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <string>

#include "driftbench/common/errors.hpp"
#include "driftbench/theory/probes.hpp"

namespace driftbench::theory {
namespace {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(a).solve(y);
}

double mean_sq(const Eigen::VectorXd& r) { return r.squaredNorm() / static_cast<double>(r.size()); }

}  // namespace

ExpressivityReport expressivity_probe(const std::vector<ExpressivityTask>& tasks, std::size_t budget) {
  const std::size_t K = tasks.size();
  if (K < 2) throw ConfigError("expressivity probe needs at least 2 tasks");
  if (budget == 0 || budget % K != 0) {
    throw ConfigError("budget " + std::to_string(budget) + " is not divisible by " + std::to_string(K) + " tasks");
  }
  Eigen::Index rows = 0;
  const Eigen::Index F = tasks[0].features.cols();
  for (const auto& t : tasks) {
    if (t.features.cols() != F) throw DimensionError("all tasks must share a feature count");
    if (t.features.rows() != t.targets.size() || t.targets.size() == 0) {
      throw DimensionError("task features and targets disagree in length");
    }
    rows += t.features.rows();
  }
  const Eigen::Index p_static = std::min<Eigen::Index>(static_cast<Eigen::Index>(budget), F);
  const Eigen::Index p_dyn = std::min<Eigen::Index>(static_cast<Eigen::Index>(budget / K), F);

  Eigen::MatrixXd a(rows, p_static);
  Eigen::VectorXd y(rows);
  Eigen::Index at = 0;
  for (const auto& t : tasks) {
    a.middleRows(at, t.features.rows()) = t.features.leftCols(p_static);
    y.segment(at, t.targets.size()) = t.targets;
    at += t.features.rows();
  }
  const Eigen::VectorXd w = least_squares(a, y);

  ExpressivityReport r;
  r.budget = budget;
  r.episodes = K;
  for (const auto& t : tasks) {
    r.static_errors.push_back(mean_sq(t.features.leftCols(p_static) * w - t.targets));
    const Eigen::MatrixXd own = t.features.leftCols(p_dyn);
    r.dynamic_errors.push_back(mean_sq(own * least_squares(own, t.targets) - t.targets));
  }
  r.static_worst_error = *std::max_element(r.static_errors.begin(), r.static_errors.end());
  r.dynamic_worst_error = *std::max_element(r.dynamic_errors.begin(), r.dynamic_errors.end());
  return r;
}

namespace {

ExpressivityTask polynomial_task(const Eigen::VectorXd& x, std::size_t F, std::size_t active, Rng& rng) {
  ExpressivityTask t;
  const Eigen::Index n = x.size();
  t.features = Eigen::MatrixXd(n, static_cast<Eigen::Index>(F));
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (std::size_t f = 0; f < F; ++f) {
      p *= x[i];
      t.features(i, static_cast<Eigen::Index>(f)) = p;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(F));
  for (std::size_t f = 0; f < active; ++f) {
    const double sign = rng.below(2) == 0 ? -1.0 : 1.0;
    w[static_cast<Eigen::Index>(f)] = sign * rng.uniform(0.5, 1.5);
  }
  t.targets = t.features * w;
  return t;
}

Eigen::VectorXd shared_inputs(std::size_t n, Rng& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

std::vector<ExpressivityTask> conflicting_tasks(std::size_t K, std::size_t budget, std::size_t n, Rng& rng) {
  if (K == 0 || budget % K != 0) throw ConfigError("budget must be a positive multiple of K");
  const Eigen::VectorXd x = shared_inputs(n, rng);
  std::vector<ExpressivityTask> out;
  for (std::size_t k = 0; k < K; ++k) out.push_back(polynomial_task(x, budget, budget / K, rng));
  return out;
}

std::vector<ExpressivityTask> identical_tasks(std::size_t K, std::size_t budget, std::size_t n, Rng& rng) {
  if (K == 0 || budget % K != 0) throw ConfigError("budget must be a positive multiple of K");
  const Eigen::VectorXd x = shared_inputs(n, rng);
  return std::vector<ExpressivityTask>(K, polynomial_task(x, budget, budget / K, rng));
}

}  // namespace driftbench::theory
