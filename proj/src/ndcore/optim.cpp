// SPDX-License-Identifier: Apache-2.0
#include "driftbench/ndcore/optim.hpp"

#include <cmath>
#include <string>

#include "driftbench/common/errors.hpp"

namespace driftbench::nd {
namespace {

void check_lengths(std::size_t p, std::size_t g, const char* op) {
  if (p != g) {
    throw DimensionError(std::string(op) + ": " + std::to_string(p) + " params vs " + std::to_string(g) +
                         " grads");
  }
}

void check_lr(double lr, const char* op) {
  if (!(lr > 0.0)) throw ConfigError(std::string(op) + ": learning rate must be positive");
}

}  // namespace

void sgd_update(std::span<double> params, std::span<const double> grads, double lr) {
  check_lengths(params.size(), grads.size(), "sgd_step");
  check_lr(lr, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

std::vector<double> sgd_step(std::span<const double> params, std::span<const double> grads, double lr) {
  std::vector<double> out(params.begin(), params.end());
  sgd_update(out, grads, lr);
  return out;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  check_lengths(params.size(), grads.size(), "adam_step");
  check_lr(lr, "adam_step");
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) + " entries, params have " +
                         std::to_string(params.size()));
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

std::vector<double> adam_step(std::span<const double> params, std::span<const double> grads, AdamState& state,
                              double lr) {
  std::vector<double> out(params.begin(), params.end());
  adam_update(out, grads, state, lr);
  return out;
}

double global_norm(std::span<const std::span<double>> grads) {
  double s = 0.0;
  for (std::span<double> g : grads)
    for (double v : g) s += v * v;
  return std::sqrt(s);
}

void clip_global_norm(std::span<const std::span<double>> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_global_norm: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm <= max_norm) return;
  const double k = max_norm / norm;
  for (std::span<double> g : grads)
    for (double& v : g) v *= k;
}

}  // namespace driftbench::nd
