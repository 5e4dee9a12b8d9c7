// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "driftbench/adapt/loop.hpp"
#include "driftbench/common/errors.hpp"

using namespace driftbench;
using namespace driftbench::adapt;
using model::Model;
using model::VariantTag;
using nd::Tensor;

namespace {

Model make(VariantTag v, std::uint64_t seed) {
  Rng rng(seed);
  model::ModelConfig c;
  c.variant = v;
  return Model(c, rng);
}

synth::EpisodeSet episodes(std::size_t n, std::uint64_t seed = 5) {
  synth::DatasetSpec s;
  s.seed = seed;
  return synth::episode_stream(s, n);
}

AdaptConfig small_config() {
  AdaptConfig c;
  c.epochs = 2;
  c.batches_per_epoch = 3;
  return c;
}

/// Batch whose targets equal the model's own predictions.
PairBatch self_targets(const Model& m, const synth::Episode& ep) {
  PairBatch b = PairBatch::from(ep.query);
  b.y = m.predict(b.x);
  return b;
}

double theta_norm(const Model& m) {
  double s = 0.0;
  for (const Tensor* t : m.group_tensors(model::kTheta)) {
    for (double v : t->data()) s += v * v;
  }
  return std::sqrt(s);
}

constexpr model::GroupMask kAll = model::kPhi | model::kTheta | model::kPsi | model::kAdapter;

}  // namespace

TEST_CASE("config validation") {
  AdaptConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK_NOTHROW(c.validate_for(2));
  CHECK_THROWS_AS(c.validate_for(3), ConfigError);

  AdaptConfig big_alpha;
  big_alpha.alphas = {3e-5, 2e-3};
  CHECK_THROWS_AS(big_alpha.validate(), ConfigError);
  AdaptConfig equal_beta;
  equal_beta.alphas = {1e-3, 1e-3};
  CHECK_THROWS_AS(equal_beta.validate(), ConfigError);
  AdaptConfig decreasing;
  decreasing.alphas = {5e-5, 3e-5};
  CHECK_THROWS_AS(decreasing.validate(), ConfigError);
  AdaptConfig zero_alpha;
  zero_alpha.alphas = {0.0, 3e-5};
  CHECK_THROWS_AS(zero_alpha.validate(), ConfigError);
  AdaptConfig no_steps;
  no_steps.inner_steps = 0;
  CHECK_THROWS_AS(no_steps.validate(), ConfigError);
  AdaptConfig no_epochs;
  no_epochs.epochs = 0;
  CHECK_THROWS_AS(no_epochs.validate(), ConfigError);
  AdaptConfig neg_gamma;
  neg_gamma.gammas = {-1.0, 0.0};
  CHECK_THROWS_AS(neg_gamma.validate(), ConfigError);
}

TEST_CASE("config json") {
  AdaptConfig c;
  c.inner_steps = 30;
  c.eval_inner_steps = 30;
  c.optimizer = Optimizer::sgd;
  c.grad_transform.kind = GradTransform::Kind::identity;
  c.gammas = {0.5, 0.25};
  const AdaptConfig back = AdaptConfig::from_json(nlohmann::json::parse(c.to_json()));
  CHECK(back.to_json() == c.to_json());

  // eval_inner_steps follows inner_steps unless given.
  CHECK(AdaptConfig::from_json(nlohmann::json::parse(R"({"inner_steps": 30})")).eval_inner_steps == 30);

  try {
    AdaptConfig::from_json(nlohmann::json::parse(R"({"beta": 1e-3, "alphas": [2e-3, 2e-3]})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("adapt.alphas") != std::string::npos);
  }
  CHECK_THROWS_AS(AdaptConfig::from_json(nlohmann::json::parse(R"({"beta": "fast"})")), ConfigError);
  CHECK_THROWS_AS(AdaptConfig::from_json(nlohmann::json::parse(R"({"optimizer": "rmsprop"})")), ConfigError);
}

TEST_CASE("task_loss") {
  const auto data = episodes(1);
  AdaptConfig cfg;

  SUBCASE("perfect predictions with zero theta") {
    Model m = make(VariantTag::dynamic, 1);
    CHECK(task_loss(m, self_targets(m, data.episodes[0]), cfg) == 0.0);
  }
  SUBCASE("perfect predictions with gamma 0.1 and theta [1, 1]") {
    Model m = make(VariantTag::dynamic, 1);
    m.trunk()[0].theta.weight[0] = 1.0;
    m.trunk()[1].theta.weight[5] = 1.0;
    cfg.gammas = {0.1, 0.1};
    CHECK(task_loss(m, self_targets(m, data.episodes[0]), cfg) == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("gamma 0 gives the plain mean MSE") {
    Model m = make(VariantTag::dynamic, 1);
    m.trunk()[0].theta.weight[0] = 1.0;
    cfg.gammas = {0.0, 0.0};
    const PairBatch b = PairBatch::from(data.episodes[0].support);
    CHECK(task_loss(m, b, cfg) == mse(m, b));
    CHECK(mse(m, b) > 0.0);
  }
  SUBCASE("variants without theta contribute no penalty") {
    Model m = make(VariantTag::static_, 1);
    cfg.gammas = {1.0, 1.0};
    const PairBatch b = PairBatch::from(data.episodes[0].support);
    CHECK(task_loss(m, b, cfg) == mse(m, b));
  }
  SUBCASE("empty pairs") {
    Model m = make(VariantTag::dynamic, 1);
    CHECK_THROWS_AS(PairBatch::from({}), ContractError);
    CHECK_THROWS_AS(task_loss(m, PairBatch{}, cfg), ContractError);
  }
}

TEST_CASE("phase1_adapt") {
  const auto data = episodes(100, 21);
  AdaptConfig cfg;

  SUBCASE("disabled phase 1 leaves the model unchanged") {
    Model m = make(VariantTag::dynamic, 2);
    const auto h = m.group_hash(kAll);
    cfg.phase1_enabled = false;
    phase1_adapt(m, PairBatch::from(data.episodes[0].support), cfg, cfg.inner_steps);
    CHECK(m.group_hash(kAll) == h);
  }
  SUBCASE("support loss decreases on at least 95 of 100 episodes") {
    Model m = make(VariantTag::dynamic, 3);
    Rng rng(4);
    int decreased = 0;
    for (const auto& ep : data.episodes) {
      m.reinit_branch(rng);
      const Phase1Result r = phase1_adapt(m, PairBatch::from(ep.support), cfg, 10);
      decreased += r.support_loss_after <= r.support_loss_before ? 1 : 0;
    }
    CHECK(decreased >= 95);
  }
  SUBCASE("dynamic phase 1 touches only the branch") {
    Model m = make(VariantTag::dynamic, 5);
    const auto trunk = m.group_hash(model::kPhi | model::kTheta);
    const auto branch = m.group_hash(model::kPsi);
    phase1_adapt(m, PairBatch::from(data.episodes[1].support), cfg, 10);
    CHECK(m.group_hash(model::kPhi | model::kTheta) == trunk);
    CHECK(m.group_hash(model::kPsi) != branch);
  }
  SUBCASE("joint phase 1 also moves theta") {
    Model m = make(VariantTag::dynamic, 5);
    cfg.joint_phase1 = true;
    const auto phi = m.group_hash(model::kPhi);
    const auto theta = m.group_hash(model::kTheta);
    phase1_adapt(m, PairBatch::from(data.episodes[1].support), cfg, 3);
    CHECK(m.group_hash(model::kPhi) == phi);
    CHECK(m.group_hash(model::kTheta) != theta);
  }
  SUBCASE("lora adapts only adapters") {
    Model m = make(VariantTag::lora, 6);
    const auto base = m.group_hash(model::kPhi | model::kPsi);
    const Phase1Result r = phase1_adapt(m, PairBatch::from(data.episodes[2].support), cfg, 10);
    CHECK(m.group_hash(model::kPhi | model::kPsi) == base);
    CHECK(r.support_loss_after < r.support_loss_before);
  }
  SUBCASE("static has no phase 1") {
    Model m = make(VariantTag::static_, 7);
    CHECK_THROWS_AS(phase1_adapt(m, PairBatch::from(data.episodes[0].support), cfg, 1), ContractError);
  }
}

TEST_CASE("phase2_step") {
  const auto data = episodes(2);
  TrunkState state;

  SUBCASE("no trunk training leaves every parameter unchanged") {
    for (VariantTag v : {VariantTag::dynamic, VariantTag::static_, VariantTag::init_all, VariantTag::lora}) {
      Model m = make(v, 8);
      const auto h = m.group_hash(kAll);
      const PairBatch q = PairBatch::from(data.episodes[0].query);
      CHECK(phase2_step(m, q, AdaptConfig{}, false, state) == mse(m, q));
      CHECK(m.group_hash(kAll) == h);
    }
  }
  SUBCASE("penalty gradient with perfect predictions is 2·gamma·theta") {
    Model m = make(VariantTag::dynamic, 9);
    m.trunk()[0].theta.weight[3] = 0.7;
    m.trunk()[1].theta.bias[2] = -0.4;
    AdaptConfig cfg;
    cfg.optimizer = Optimizer::sgd;
    cfg.grad_transform.kind = GradTransform::Kind::identity;
    cfg.gammas = {0.2, 0.3};
    cfg.alphas = {0.01, 0.02};
    cfg.beta = 0.1;
    const PairBatch q = self_targets(m, data.episodes[0]);
    CHECK(phase2_step(m, q, cfg, true, state) == 0.0);
    CHECK(m.trunk()[0].theta.weight[3] == doctest::Approx(0.7 - 0.01 * 2 * 0.2 * 0.7).epsilon(1e-14));
    CHECK(m.trunk()[1].theta.bias[2] == doctest::Approx(-0.4 + 0.02 * 2 * 0.3 * 0.4).epsilon(1e-14));
    CHECK(m.trunk()[0].theta.weight[4] == 0.0);
  }
  SUBCASE("one sgd step on half theta squared") {
    // γ = 0.5 turns the penalty into ½Θ² with unit curvature.
    Model m = make(VariantTag::dynamic, 10);
    m.trunk()[0].theta.weight[0] = 1.0;
    AdaptConfig cfg;
    cfg.optimizer = Optimizer::sgd;
    cfg.grad_transform.kind = GradTransform::Kind::identity;
    cfg.gammas = {0.25, 0.25};
    cfg.alphas = {0.1, 0.1};
    cfg.beta = 0.5;
    const PairBatch q = self_targets(m, data.episodes[1]);
    const auto phi = m.group_hash(model::kPhi | model::kPsi);
    phase2_step(m, q, cfg, true, state);
    CHECK(m.trunk()[0].theta.weight[0] == doctest::Approx(0.95).epsilon(1e-15));
    cfg.gammas = {0.5, 0.5};
    m.trunk()[0].theta.weight[0] = 1.0;
    TrunkState fresh;
    phase2_step(m, self_targets(m, data.episodes[1]), cfg, true, fresh);
    CHECK(m.trunk()[0].theta.weight[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(m.group_hash(model::kPhi | model::kPsi) == phi);
  }
}

TEST_CASE("train_run") {
  const auto data = episodes(8);

  SUBCASE("one epoch of one batch gives one record") {
    Model m = make(VariantTag::dynamic, 11);
    AdaptConfig cfg;
    cfg.epochs = 1;
    cfg.batches_per_epoch = 1;
    RunLog log = train_run(data, m, cfg, 1);
    CHECK(log.episode_query_mse.size() == 1);
    CHECK(log.epoch_query_loss.size() == 1);
    CHECK(log.epoch_support_loss.size() == 1);
  }
  SUBCASE("reruns are bit identical") {
    for (VariantTag v : {VariantTag::dynamic, VariantTag::static_, VariantTag::init_all, VariantTag::lora}) {
      Model a = make(v, 12), b = make(v, 12);
      const RunLog la = train_run(data, a, small_config(), 99);
      const RunLog lb = train_run(data, b, small_config(), 99);
      CHECK(la.to_json() == lb.to_json());
      CHECK(a.group_hash(kAll) == b.group_hash(kAll));
      CHECK(la.episode_query_mse.size() == 6);
      CHECK(la.to_json().find("wall") == std::string::npos);
    }
  }
  SUBCASE("seed changes the run") {
    Model a = make(VariantTag::dynamic, 12), b = make(VariantTag::dynamic, 12);
    CHECK(train_run(data, a, small_config(), 1).to_json() != train_run(data, b, small_config(), 2).to_json());
  }
  SUBCASE("dynamic run: phi fixed, theta moves") {
    Model m = make(VariantTag::dynamic, 13);
    const auto phi = m.group_hash(model::kPhi);
    const auto theta = m.group_hash(model::kTheta);
    train_run(data, m, small_config(), 3);
    CHECK(m.group_hash(model::kPhi) == phi);
    CHECK(m.group_hash(model::kTheta) != theta);
  }
  SUBCASE("init-all keeps nothing between episodes") {
    // Training state is fully re-drawn per episode, so the run leaves the
    // model exactly as the last reinit + phase 1 produced it.
    Model m = make(VariantTag::init_all, 14);
    AdaptConfig cfg = small_config();
    train_run(data, m, cfg, 5);
    CHECK(m.audit().theta == 0);
  }
  SUBCASE("lora training updates the base, not the adapters") {
    Model m = make(VariantTag::lora, 15);
    const auto ad = m.group_hash(model::kAdapter);
    const auto base = m.group_hash(model::kPhi | model::kPsi);
    train_run(data, m, small_config(), 6);
    CHECK(m.group_hash(model::kAdapter) == ad);
    CHECK(m.group_hash(model::kPhi | model::kPsi) != base);
  }
  SUBCASE("invalid config is rejected before training") {
    Model m = make(VariantTag::dynamic, 16);
    AdaptConfig cfg = small_config();
    cfg.alphas = {1e-2, 1e-2};
    const auto h = m.group_hash(kAll);
    CHECK_THROWS_AS(train_run(data, m, cfg, 1), ConfigError);
    CHECK(m.group_hash(kAll) == h);
  }
}

namespace {

struct IsolationRecorder : PhaseObserver {
  std::uint64_t phi0 = 0;
  bool init = false;
  std::uint64_t last_theta = 0, last_psi = 0;
  Phase last_phase = Phase::before_reinit;
  int phi_changes = 0, theta_bad = 0, psi_bad = 0, theta_moves = 0;

  void on_phase(Phase p, const Model& m, std::size_t) override {
    const auto phi = m.group_hash(model::kPhi);
    const auto theta = m.group_hash(model::kTheta);
    const auto psi = m.group_hash(model::kPsi);
    if (!init) {
      phi0 = phi;
      init = true;
    } else {
      if (phi != phi0) ++phi_changes;
      if (theta != last_theta) {
        if (p == Phase::after_phase2) {
          ++theta_moves;
        } else {
          ++theta_bad;
        }
      }
      const bool psi_allowed = p == Phase::after_reinit || p == Phase::after_phase1;
      if (psi != last_psi && !psi_allowed) ++psi_bad;
    }
    last_theta = theta;
    last_psi = psi;
    last_phase = p;
  }
};

}  // namespace

TEST_CASE("phase isolation across a run") {
  const auto data = episodes(10);
  Model m = make(VariantTag::dynamic, 17);
  IsolationRecorder rec;
  AdaptConfig cfg = small_config();
  cfg.epochs = 3;
  train_run(data, m, cfg, 7, &rec);
  CHECK(rec.phi_changes == 0);
  CHECK(rec.theta_bad == 0);
  CHECK(rec.psi_bad == 0);
  CHECK(rec.theta_moves == 9);
}

TEST_CASE("evaluate") {
  const auto train = episodes(6, 30);
  const auto eval = episodes(12, 31);
  Model m = make(VariantTag::dynamic, 18);
  train_run(train, m, small_config(), 8);
  AdaptConfig cfg = small_config();

  const auto trunk = m.group_hash(model::kPhi | model::kTheta);
  const auto all = m.group_hash(kAll);
  const EvalReport a = evaluate(eval, m, cfg, 77);
  CHECK(m.group_hash(model::kPhi | model::kTheta) == trunk);
  CHECK(m.group_hash(kAll) == all);
  const EvalReport b = evaluate(eval, m, cfg, 77);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.records.size() == 12);
  CHECK(a.dataset == "s1");
  CHECK(a.variant == "dynamic");

  double sum = 0.0;
  for (const auto& r : a.records) sum += r.query_mse;
  CHECK(a.mean_mse == doctest::Approx(sum / 12.0).epsilon(1e-15));
  CHECK(a.std_mse >= 0.0);

  const EvalReport part = evaluate(eval, m, cfg, 77, 4, "dynamic*");
  CHECK(part.records.size() == 4);
  CHECK(part.variant == "dynamic*");
  CHECK(part.records[2].query_mse == a.records[2].query_mse);
  CHECK_THROWS_AS(evaluate(eval, m, cfg, 77, 13), ConfigError);

  const EvalReport round = EvalReport::from_json(a.to_json());
  CHECK(round.to_json() == a.to_json());

  SUBCASE("static evaluation is a plain forward") {
    Model s = make(VariantTag::static_, 19);
    const EvalReport r = evaluate(eval, s, cfg, 1, 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(r.records[k].support_mse_before == r.records[k].support_mse_after);
      CHECK(r.records[k].query_mse == mse(s, PairBatch::from(eval.episodes[k].query)));
    }
  }
  SUBCASE("adapt_and_predict matches the evaluation protocol") {
    const EpisodePredictions p = adapt_and_predict(eval.episodes[3], m, cfg, derive_seed(77, 3));
    REQUIRE(p.query.size() == 5);
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t t = 0; t < 30; ++t) {
        const double d = p.query[i][t] - eval.episodes[3].query[i].output[t];
        acc += d * d;
      }
    }
    CHECK(acc / 150.0 == doctest::Approx(a.records[3].query_mse).epsilon(1e-12));
  }
}

TEST_CASE("monotone regularization") {
  // Larger γ never leaves a larger perturbation, per seed.
  const auto data = episodes(20, 40);
  for (std::uint64_t seed : {1, 2, 3}) {
    AdaptConfig weak = small_config();
    weak.epochs = 2;
    weak.batches_per_epoch = 10;
    weak.gammas = {0.1, 0.1};
    AdaptConfig strong = weak;
    strong.gammas = {1.0, 1.0};
    Model a = make(VariantTag::dynamic, seed), b = make(VariantTag::dynamic, seed);
    train_run(data, a, weak, seed);
    train_run(data, b, strong, seed);
    CAPTURE(seed);
    CHECK(theta_norm(b) <= theta_norm(a));
  }
}
