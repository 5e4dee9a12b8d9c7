// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "driftbench/common/rng.hpp"
#include "driftbench/ndcore/tensor.hpp"

namespace driftbench::model {

enum class Activation { relu, tanh };
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

/// One affine layer: weight [d_in×d_out], bias [d_out], and optional
/// LayerNorm gain/shift [d_out]. The norm tensors are empty when the layer
/// has no norm.
struct LayerParams {
  nd::Tensor weight;
  nd::Tensor bias;
  nd::Tensor ln_gain;
  nd::Tensor ln_shift;

  bool has_norm() const { return !ln_gain.empty(); }
  std::size_t count() const;
  std::vector<nd::Tensor*> tensors();
  std::vector<const nd::Tensor*> tensors() const;

  static LayerParams zeros(std::size_t d_in, std::size_t d_out, bool norm);
  /// Same shapes as `like`, every entry zero.
  static LayerParams zeros_like(const LayerParams& like);
};

/// Initialization distribution 𝓘_ℓ: weight and bias entries uniform in
/// [-bound, bound); norm gain 1, shift 0.
struct InitSpec {
  double bound = 0.0;

  static InitSpec for_fan_in(std::size_t fan_in);
  void draw(LayerParams& p, Rng& rng) const;
};

struct TrunkLayerParams {
  LayerParams phi;
  /// Perturbation Θ; empty (no tensors) for variants without one.
  LayerParams theta;

  bool has_theta() const { return !theta.weight.empty(); }
};

struct BranchLayerParams {
  LayerParams psi;
  InitSpec init;
};

struct LoraAdapter {
  nd::Tensor down;  // d_in × r
  nd::Tensor up;    // r × d_out
  std::size_t rank = 0;
  double scale = 1.0;
};

/// Φ + Θ elementwise over every tensor of the layer; Φ alone without Θ.
LayerParams effective_weight(const TrunkLayerParams& layer);

/// base + scale·(down·up). Throws ConfigError when rank ≥ min(d_in, d_out)
/// and DimensionError when shapes do not conform.
nd::Tensor lora_effective_weight(const nd::Tensor& base, const LoraAdapter& adapter);

}  // namespace driftbench::model
