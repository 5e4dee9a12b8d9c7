// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftbench/adapt/config.hpp"
#include "driftbench/model/model.hpp"
#include "driftbench/ndcore/optim.hpp"
#include "driftbench/synthgen/generator.hpp"

namespace driftbench::adapt {

/// Window pairs stacked into x [n×input_len] and y [n×output_len].
struct PairBatch {
  nd::Tensor x;
  nd::Tensor y;

  static PairBatch from(std::span<const synth::WindowPair> pairs);
  /// Support followed by query.
  static PairBatch pooled(const synth::Episode& ep);
};

/// Mean MSE over the pairs plus Σ_ℓ γ_ℓ‖Θ^(ℓ)‖² for variants with Θ.
/// Tensors in `grads` are bound as tape parameters.
nd::Var task_loss(nd::Tape& tape, model::Model& m, const PairBatch& pairs, const AdaptConfig& cfg,
                  model::GroupMask grads);
double task_loss(const model::Model& m, const PairBatch& pairs, const AdaptConfig& cfg);
/// Mean MSE only.
double mse(const model::Model& m, const PairBatch& pairs);

/// One optimizer state per tensor of an update set.
struct OptimizerState {
  std::vector<nd::AdamState> adam;

  void ensure(const std::vector<nd::Tensor*>& tensors);
};

/// Gradient step over `tensors` using the grads left by backward(): applies
/// cfg.grad_transform jointly, then cfg.optimizer with rates[k] per tensor.
void apply_update(const std::vector<nd::Tensor*>& tensors, std::span<const double> rates, const AdaptConfig& cfg,
                  OptimizerState& state);

struct Phase1Result {
  double support_loss_before = 0.0;
  double support_loss_after = 0.0;
};

/// `steps` gradient steps of task_loss on the support pairs over the
/// variant's adaptable set with a fresh optimizer state. The rate is β
/// (α_ℓ for Θ under joint_phase1). Throws ContractError for Static.
Phase1Result phase1_adapt(model::Model& m, const PairBatch& support, const AdaptConfig& cfg, std::size_t steps);

/// Persistent Θ optimizer state of a training run.
struct TrunkState {
  OptimizerState opt;
};

/// Forward on the query pairs; returns their mean MSE. With train_trunk on
/// the Dynamic variant, one step on task_loss updates every Θ^(ℓ) at α_ℓ;
/// other variants and train_trunk = false leave all parameters unchanged.
double phase2_step(model::Model& m, const PairBatch& query, const AdaptConfig& cfg, bool train_trunk,
                   TrunkState& state);

enum class Phase { before_reinit, after_reinit, after_phase1, after_phase2 };

/// Called at each phase boundary of train_run, e.g. to hash parameter groups.
class PhaseObserver {
 public:
  virtual ~PhaseObserver() = default;
  virtual void on_phase(Phase phase, const model::Model& m, std::size_t episode) = 0;
};

struct RunLog {
  std::string variant;
  std::uint64_t seed = 0;
  AdaptConfig config;
  std::vector<double> epoch_support_loss;
  std::vector<double> epoch_query_loss;
  std::vector<double> episode_query_mse;
  /// Kept out of the JSON so logs stay byte-identical across reruns.
  double wall_time_s = 0.0;

  std::string to_json() const;
};

/// epochs × batches_per_epoch episodes, cycling through `data` in order.
///   Dynamic:  reinit Ψ → phase 1 → phase 2 with trunk update.
///   Static:   one step at β on task_loss over all 10 pairs of the episode.
///   Lora:     the Static recipe on the frozen-at-eval base (pretraining).
///   InitAll:  reinit all → phase 1 → phase 2 without update.
RunLog train_run(const synth::EpisodeSet& data, model::Model& m, const AdaptConfig& cfg, std::uint64_t seed,
                 PhaseObserver* observer = nullptr);

struct EpisodeRecord {
  std::size_t index = 0;
  double query_mse = 0.0;
  double support_mse_before = 0.0;
  double support_mse_after = 0.0;
};

struct EvalReport {
  std::string dataset;
  std::string variant;
  std::uint64_t eval_seed = 0;
  std::size_t episodes = 0;
  double mean_mse = 0.0;
  /// Population standard deviation over episodes.
  double std_mse = 0.0;
  std::vector<EpisodeRecord> records;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// Per episode k on a private copy of the model, with an RNG seeded by
/// derive_seed(eval_seed, k): reinit adaptable set → phase 1
/// (cfg.eval_inner_steps) → query MSE. Static skips phase 1. `m` is not
/// modified. `count` = 0 evaluates every episode.
EvalReport evaluate(const synth::EpisodeSet& data, const model::Model& m, const AdaptConfig& cfg,
                    std::uint64_t eval_seed, std::size_t count = 0, const std::string& variant_label = "");

struct EpisodePredictions {
  std::vector<std::vector<double>> support;
  std::vector<std::vector<double>> query;
};

/// Evaluation protocol for one episode, returning the adapted predictions.
EpisodePredictions adapt_and_predict(const synth::Episode& ep, const model::Model& m, const AdaptConfig& cfg,
                                     std::uint64_t seed);

}  // namespace driftbench::adapt
