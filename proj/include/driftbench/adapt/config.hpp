// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "driftbench/common/json_writer.hpp"

namespace driftbench::adapt {

enum class Optimizer { adam, sgd };
std::string_view to_string(Optimizer o);

/// Applied to the gradients of the updated set after every backward pass.
struct GradTransform {
  enum class Kind { identity, clip_norm };
  Kind kind = Kind::clip_norm;
  double max_norm = 1.0;
};

struct AdaptConfig {
  double beta = 1e-3;
  /// α_0..α_{L−1}, one per trunk layer.
  std::vector<double> alphas{3e-5, 3e-5};
  std::vector<double> gammas{1e-4, 1e-4};
  std::size_t inner_steps = 10;
  /// Phase-1 steps used by evaluate(); independent of inner_steps.
  std::size_t eval_inner_steps = 10;
  std::size_t epochs = 50;
  std::size_t batches_per_epoch = 100;
  Optimizer optimizer = Optimizer::adam;
  GradTransform grad_transform;
  /// Also adapt Θ (at rates α_ℓ) during phase 1.
  bool joint_phase1 = false;
  /// Test hook: false turns phase 1 into a no-op.
  bool phase1_enabled = true;

  /// Throws ConfigError naming the offending field. Enforces
  /// 0 < α_0 ≤ … ≤ α_{L−1} < β, γ_ℓ ≥ 0, inner_steps ≥ 1, epochs ≥ 1.
  void validate() const;
  /// validate() plus |alphas| == |gammas| == trunk_layers.
  void validate_for(std::size_t trunk_layers) const;

  void write(JsonWriter& w) const;
  std::string to_json() const;
  static AdaptConfig from_json(const nlohmann::json& j);
};

}  // namespace driftbench::adapt
