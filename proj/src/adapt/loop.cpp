// SPDX-License-Identifier: Apache-2.0
#include "driftbench/adapt/loop.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "driftbench/common/errors.hpp"
#include "driftbench/ndcore/ops.hpp"

namespace driftbench::adapt {

using model::GroupMask;
using model::Model;
using model::VariantTag;
using nd::Tape;
using nd::Tensor;
using nd::Var;

PairBatch PairBatch::from(std::span<const synth::WindowPair> pairs) {
  if (pairs.empty()) throw ContractError("task loss needs at least one pair");
  const std::size_t n = pairs.size();
  const std::size_t din = pairs[0].input.size(), dout = pairs[0].output.size();
  PairBatch b{Tensor({n, din}), Tensor({n, dout})};
  for (std::size_t r = 0; r < n; ++r) {
    if (pairs[r].input.size() != din || pairs[r].output.size() != dout) {
      throw DimensionError("window pairs in one batch must share lengths");
    }
    std::copy(pairs[r].input.begin(), pairs[r].input.end(), b.x.data().begin() + r * din);
    std::copy(pairs[r].output.begin(), pairs[r].output.end(), b.y.data().begin() + r * dout);
  }
  return b;
}

PairBatch PairBatch::pooled(const synth::Episode& ep) {
  std::vector<synth::WindowPair> all(ep.support);
  all.insert(all.end(), ep.query.begin(), ep.query.end());
  return from(all);
}

namespace {

struct Losses {
  Var mse;
  Var total;
};

Losses losses(Tape& tape, Model& m, const PairBatch& pairs, const AdaptConfig& cfg, GroupMask grads) {
  if (pairs.x.empty()) throw ContractError("task loss needs at least one pair");
  Var pred = m.forward(tape, tape.constant_ref(pairs.x), grads);
  Var mse = nd::mse_loss(pred, tape.constant_ref(pairs.y));
  std::vector<Var> blocks;
  std::vector<double> gammas;
  for (std::size_t l = 0; l < m.trunk().size(); ++l) {
    auto& layer = m.trunk()[l];
    if (!layer.has_theta()) continue;
    if (l >= cfg.gammas.size()) throw ConfigError("adapt.gammas has fewer entries than trunk layers");
    for (Tensor* t : layer.theta.tensors()) {
      blocks.push_back((grads & model::kTheta) ? tape.parameter(*t) : tape.constant_ref(*t));
      gammas.push_back(cfg.gammas[l]);
    }
  }
  if (blocks.empty()) return {mse, mse};
  return {mse, nd::add(mse, nd::l2_penalty(blocks, gammas))};
}

/// Learning rate for each tensor of `groups`, in group_tensors() order.
std::vector<double> rates_for(Model& m, GroupMask groups, const AdaptConfig& cfg, double base_rate) {
  std::vector<double> rates;
  for (const model::NamedTensor& nt : m.named_parameters()) {
    if (!(groups & nt.group)) continue;
    if (nt.group == model::kTheta) {
      // Names look like "trunk.<l>.theta.<tensor>".
      const std::size_t layer = std::stoul(nt.name.substr(6));
      rates.push_back(cfg.alphas.at(layer));
    } else {
      rates.push_back(base_rate);
    }
  }
  return rates;
}

void static_step(Model& m, const PairBatch& pooled, const AdaptConfig& cfg, OptimizerState& state) {
  const GroupMask groups = model::kPhi | model::kPsi;
  Tape tape;
  Losses l = losses(tape, m, pooled, cfg, groups);
  tape.backward(l.total);
  auto tensors = m.group_tensors(groups);
  const auto rates = rates_for(m, groups, cfg, cfg.beta);
  state.ensure(tensors);
  apply_update(tensors, rates, cfg, state);
}

}  // namespace

Var task_loss(Tape& tape, Model& m, const PairBatch& pairs, const AdaptConfig& cfg, GroupMask grads) {
  return losses(tape, m, pairs, cfg, grads).total;
}

double task_loss(const Model& m, const PairBatch& pairs, const AdaptConfig& cfg) {
  Tape tape;
  // No tensor is bound as a parameter, so the model is only read.
  return losses(tape, const_cast<Model&>(m), pairs, cfg, 0).total.value().item();
}

double mse(const Model& m, const PairBatch& pairs) {
  if (pairs.x.empty()) throw ContractError("mse needs at least one pair");
  const Tensor pred = m.predict(pairs.x);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - pairs.y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

void OptimizerState::ensure(const std::vector<Tensor*>& tensors) {
  if (adam.size() == tensors.size()) return;
  adam.clear();
  for (const Tensor* t : tensors) adam.push_back(nd::AdamState::fresh(t->size()));
}

void apply_update(const std::vector<Tensor*>& tensors, std::span<const double> rates, const AdaptConfig& cfg,
                  OptimizerState& state) {
  if (rates.size() != tensors.size()) throw DimensionError("one learning rate per tensor expected");
  std::vector<std::span<double>> grads;
  for (Tensor* t : tensors) {
    if (!t->has_grad()) throw ContractError("apply_update before backward()");
    grads.push_back(t->grad());
  }
  if (cfg.grad_transform.kind == GradTransform::Kind::clip_norm) {
    nd::clip_global_norm(grads, cfg.grad_transform.max_norm);
  }
  if (cfg.optimizer == Optimizer::adam) state.ensure(tensors);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (cfg.optimizer == Optimizer::adam) {
      nd::adam_update(tensors[k]->data(), grads[k], state.adam[k], rates[k]);
    } else {
      nd::sgd_update(tensors[k]->data(), grads[k], rates[k]);
    }
    tensors[k]->clear_grad();
  }
}

Phase1Result phase1_adapt(Model& m, const PairBatch& support, const AdaptConfig& cfg, std::size_t steps) {
  if (m.variant() == VariantTag::static_) throw ContractError("the static variant has no phase 1");
  Phase1Result r;
  if (!cfg.phase1_enabled || steps == 0) {
    r.support_loss_before = r.support_loss_after = mse(m, support);
    return r;
  }
  const GroupMask groups = m.adaptable_groups(cfg.joint_phase1);
  auto tensors = m.group_tensors(groups);
  const auto rates = rates_for(m, groups, cfg, cfg.beta);
  OptimizerState state;
  for (std::size_t s = 0; s < steps; ++s) {
    Tape tape;
    Losses l = losses(tape, m, support, cfg, groups);
    if (s == 0) r.support_loss_before = l.mse.value().item();
    tape.backward(l.total);
    apply_update(tensors, rates, cfg, state);
  }
  r.support_loss_after = mse(m, support);
  return r;
}

double phase2_step(Model& m, const PairBatch& query, const AdaptConfig& cfg, bool train_trunk, TrunkState& state) {
  if (!train_trunk || m.variant() != VariantTag::dynamic) return mse(m, query);
  Tape tape;
  Losses l = losses(tape, m, query, cfg, model::kTheta);
  const double q = l.mse.value().item();
  tape.backward(l.total);
  auto tensors = m.group_tensors(model::kTheta);
  const auto rates = rates_for(m, model::kTheta, cfg, 0.0);
  apply_update(tensors, rates, cfg, state.opt);
  return q;
}

RunLog train_run(const synth::EpisodeSet& data, Model& m, const AdaptConfig& cfg, std::uint64_t seed,
                 PhaseObserver* observer) {
  cfg.validate_for(m.trunk().size());
  if (data.episodes.empty()) throw ContractError("train_run needs at least one episode");
  const auto start = std::chrono::steady_clock::now();
  RunLog log;
  log.variant = std::string(model::to_string(m.variant()));
  log.seed = seed;
  log.config = cfg;
  Rng rng(seed);
  TrunkState trunk_state;
  OptimizerState static_state;
  auto notify = [&](Phase p, std::size_t e) {
    if (observer) observer->on_phase(p, m, e);
  };

  std::size_t e = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double support_sum = 0.0, query_sum = 0.0;
    for (std::size_t b = 0; b < cfg.batches_per_epoch; ++b, ++e) {
      const synth::Episode& ep = data.episodes[e % data.episodes.size()];
      const PairBatch support = PairBatch::from(ep.support);
      const PairBatch query = PairBatch::from(ep.query);
      double support_loss = 0.0, query_loss = 0.0;
      notify(Phase::before_reinit, e);
      switch (m.variant()) {
        case VariantTag::dynamic:
        case VariantTag::init_all: {
          m.reinit_adaptable(rng);
          notify(Phase::after_reinit, e);
          support_loss = phase1_adapt(m, support, cfg, cfg.inner_steps).support_loss_after;
          notify(Phase::after_phase1, e);
          query_loss = phase2_step(m, query, cfg, m.variant() == VariantTag::dynamic, trunk_state);
          break;
        }
        case VariantTag::static_:
        case VariantTag::lora: {
          notify(Phase::after_reinit, e);
          notify(Phase::after_phase1, e);
          support_loss = mse(m, support);
          query_loss = mse(m, query);
          static_step(m, PairBatch::pooled(ep), cfg, static_state);
          break;
        }
      }
      notify(Phase::after_phase2, e);
      support_sum += support_loss;
      query_sum += query_loss;
      log.episode_query_mse.push_back(query_loss);
    }
    const double n = static_cast<double>(cfg.batches_per_epoch);
    log.epoch_support_loss.push_back(support_sum / n);
    log.epoch_query_loss.push_back(query_sum / n);
  }
  log.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

namespace {

struct EpisodeOutcome {
  EpisodeRecord record;
  Model adapted;
};

EpisodeOutcome run_eval_episode(const synth::Episode& ep, const Model& m, const AdaptConfig& cfg,
                                std::uint64_t seed) {
  EpisodeOutcome out{{}, m};
  Model& work = out.adapted;
  const PairBatch support = PairBatch::from(ep.support);
  const PairBatch query = PairBatch::from(ep.query);
  Rng rng(seed);
  work.reinit_adaptable(rng);
  if (work.variant() == VariantTag::static_) {
    out.record.support_mse_before = out.record.support_mse_after = mse(work, support);
  } else {
    const Phase1Result p1 = phase1_adapt(work, support, cfg, cfg.eval_inner_steps);
    out.record.support_mse_before = p1.support_loss_before;
    out.record.support_mse_after = p1.support_loss_after;
  }
  out.record.query_mse = mse(work, query);
  return out;
}

}  // namespace

EvalReport evaluate(const synth::EpisodeSet& data, const Model& m, const AdaptConfig& cfg, std::uint64_t eval_seed,
                    std::size_t count, const std::string& variant_label) {
  cfg.validate_for(m.trunk().size());
  if (count == 0) count = data.episodes.size();
  if (count == 0) throw ContractError("evaluate needs at least one episode");
  if (count > data.episodes.size()) {
    throw ConfigError("requested " + std::to_string(count) + " evaluation episodes but the dataset holds " +
                      std::to_string(data.episodes.size()));
  }
  EvalReport rep;
  rep.dataset = std::string(synth::to_string(data.spec.variant));
  rep.variant = variant_label.empty() ? std::string(model::to_string(m.variant())) : variant_label;
  rep.eval_seed = eval_seed;
  rep.episodes = count;
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    EpisodeRecord r = run_eval_episode(data.episodes[k], m, cfg, derive_seed(eval_seed, k)).record;
    r.index = k;
    sum += r.query_mse;
    rep.records.push_back(r);
  }
  rep.mean_mse = sum / static_cast<double>(count);
  double var = 0.0;
  for (const auto& r : rep.records) var += (r.query_mse - rep.mean_mse) * (r.query_mse - rep.mean_mse);
  rep.std_mse = std::sqrt(var / static_cast<double>(count));
  return rep;
}

EpisodePredictions adapt_and_predict(const synth::Episode& ep, const Model& m, const AdaptConfig& cfg,
                                     std::uint64_t seed) {
  EpisodeOutcome out = run_eval_episode(ep, m, cfg, seed);
  auto rows = [&](const std::vector<synth::WindowPair>& pairs) {
    const Tensor pred = out.adapted.predict(PairBatch::from(pairs).x);
    std::vector<std::vector<double>> r;
    const std::size_t w = pred.cols();
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      r.emplace_back(pred.data().begin() + i * w, pred.data().begin() + (i + 1) * w);
    }
    return r;
  };
  return {rows(ep.support), rows(ep.query)};
}

}  // namespace driftbench::adapt
