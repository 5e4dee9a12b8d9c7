// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace driftbench::nd {

/// params − lr·grads.
std::vector<double> sgd_step(std::span<const double> params, std::span<const double> grads, double lr);
void sgd_update(std::span<double> params, std::span<const double> grads, double lr);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState fresh(std::size_t n) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
  }
};

/// Adam with bias correction:
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
///   θ ← θ − lr·m̂ / (√v̂ + ε),  m̂ = m/(1−β1^t), v̂ = v/(1−β2^t)
std::vector<double> adam_step(std::span<const double> params, std::span<const double> grads, AdamState& state,
                              double lr);
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

/// ‖g‖₂ over several gradient arrays.
double global_norm(std::span<const std::span<double>> grads);

/// Rescales all arrays jointly so their global norm is at most `max_norm`.
void clip_global_norm(std::span<const std::span<double>> grads, double max_norm);

}  // namespace driftbench::nd
