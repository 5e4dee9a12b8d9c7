// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "driftbench/model/params.hpp"
#include "driftbench/ndcore/tape.hpp"

namespace driftbench::model {

enum class VariantTag { dynamic, static_, init_all, lora };
std::string_view to_string(VariantTag v);
VariantTag parse_variant_tag(std::string_view s);

enum class Backbone { kunet, linear };
std::string_view to_string(Backbone b);
Backbone parse_backbone(std::string_view s);

/// Layer layout of the backbone.
///
/// kunet: L encoder levels (trunk) and M decoder layers (branch). Level 0
/// maps each patch of `patch_len` samples to `latent_dim`; level k > 0
/// merges adjacent node pairs (2·latent → latent). The M−1 hidden decoder
/// layers act per bottleneck node (latent → latent); the head is a dense
/// map from [flattened decoder output, flattened level-0 activations] to
/// `output_len`. Hidden layers apply affine → LayerNorm → activation; the
/// head is affine only.
///
/// linear: a single affine input_len → output_len, counted as one branch
/// layer with L = 0.
struct ArchitectureSpec {
  Backbone backbone = Backbone::kunet;
  std::size_t L = 2;
  std::size_t M = 2;
  std::size_t input_len = 60;
  std::size_t output_len = 30;
  std::size_t patch_len = 10;
  std::size_t latent_dim = 128;
  bool layer_norm = true;
  double ln_eps = 1e-5;
  Activation activation = Activation::relu;

  static ArchitectureSpec linear(std::size_t input_len = 60, std::size_t output_len = 30);

  std::size_t N() const { return L + M; }
  std::size_t patches() const { return input_len / patch_len; }
  /// Flattened activation widths d_0..d_N.
  std::vector<std::size_t> dims() const;
  void validate() const;
};

enum ParamGroup : unsigned {
  kPhi = 1u,
  kTheta = 2u,
  kPsi = 4u,
  kAdapter = 8u,
};
using GroupMask = unsigned;

struct NamedTensor {
  std::string name;
  nd::Tensor* tensor;
  ParamGroup group;
};

struct ParamAudit {
  std::size_t phi = 0;
  std::size_t theta = 0;
  std::size_t psi = 0;
  std::size_t adapter = 0;
  std::size_t total = 0;
  /// Σp_ℓ + Σq_ℓ: trunk base plus branch parameters.
  std::size_t budget = 0;
};

struct ModelConfig {
  VariantTag variant = VariantTag::dynamic;
  ArchitectureSpec arch;
  std::size_t lora_rank = 4;
  double lora_scale = 1.0;
};

struct ForwardOptions {
  /// Multiplies the level-0 skip activations fed to the head.
  double skip_scale = 1.0;
};

class Model {
 public:
  /// Draws every block from its init spec; Θ starts at zero.
  Model(const ModelConfig& config, Rng& rng);

  VariantTag variant() const { return config_.variant; }
  const ArchitectureSpec& arch() const { return config_.arch; }
  const ModelConfig& config() const { return config_; }

  std::vector<TrunkLayerParams>& trunk() { return trunk_; }
  const std::vector<TrunkLayerParams>& trunk() const { return trunk_; }
  std::vector<BranchLayerParams>& branch() { return branch_; }
  const std::vector<BranchLayerParams>& branch() const { return branch_; }
  /// One per layer, trunk layers first; empty unless the variant is Lora.
  std::vector<LoraAdapter>& adapters() { return adapters_; }
  const std::vector<LoraAdapter>& adapters() const { return adapters_; }

  /// x [n×input_len] → [n×output_len]; a rank-1 x [input_len] gives
  /// [output_len]. Tensors in `grads` are bound as tape
  /// parameters; the rest enter as constants.
  nd::Var forward(nd::Tape& tape, nd::Var x, GroupMask grads);
  nd::Tensor predict(const nd::Tensor& x, const ForwardOptions& opts = {}) const;
  /// Output of the last trunk layer for x [n×input_len].
  nd::Tensor trunk_features(const nd::Tensor& x) const;

  /// Dynamic only: re-draws every Ψ from its init spec.
  void reinit_branch(Rng& rng);
  /// InitAll only: re-draws every trunk and branch block.
  void reinit_all(Rng& rng);
  /// Lora only: down ~ U(±1/√d_in), up = 0.
  void reinit_adapters(Rng& rng);
  /// Per-variant dispatch of the three above; no-op for Static.
  void reinit_adaptable(Rng& rng);
  /// Parameter groups updated in phase 1 (empty for Static).
  GroupMask adaptable_groups(bool joint_phase1 = false) const;

  std::vector<NamedTensor> named_parameters();
  std::vector<nd::Tensor*> group_tensors(GroupMask groups);
  std::vector<const nd::Tensor*> group_tensors(GroupMask groups) const;
  std::uint64_t group_hash(GroupMask groups) const;

  /// Enumerates all parameters by group; throws ContractError when the
  /// partition is inconsistent (Θ shape ≠ Φ shape, stray adapters, totals).
  ParamAudit audit() const;

 private:
  nd::Var forward_impl(nd::Tape& tape, nd::Var x, GroupMask grads, const ForwardOptions& opts,
                       bool trunk_only) const;

  ModelConfig config_;
  std::vector<TrunkLayerParams> trunk_;
  std::vector<BranchLayerParams> branch_;
  std::vector<LoraAdapter> adapters_;
};

}  // namespace driftbench::model
