// SPDX-License-Identifier: Apache-2.0
#include "driftbench/adapt/config.hpp"

#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::adapt {

std::string_view to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

void AdaptConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("adapt.beta must be positive");
  if (alphas.empty()) throw ConfigError("adapt.alphas must list one rate per trunk layer");
  if (!(alphas.front() > 0.0)) throw ConfigError("adapt.alphas[0] must be positive");
  for (std::size_t k = 1; k < alphas.size(); ++k) {
    if (!(alphas[k - 1] <= alphas[k])) {
      throw ConfigError("adapt.alphas must be non-decreasing (alphas[" + std::to_string(k - 1) + "] > alphas[" +
                        std::to_string(k) + "])");
    }
  }
  if (!(alphas.back() < beta)) throw ConfigError("adapt.alphas must stay below adapt.beta");
  if (gammas.size() != alphas.size()) throw ConfigError("adapt.gammas must have as many entries as adapt.alphas");
  for (double g : gammas) {
    if (!(g >= 0.0)) throw ConfigError("adapt.gammas entries must be non-negative");
  }
  if (inner_steps < 1) throw ConfigError("adapt.inner_steps must be at least 1");
  if (eval_inner_steps < 1) throw ConfigError("adapt.eval_inner_steps must be at least 1");
  if (epochs < 1) throw ConfigError("adapt.epochs must be at least 1");
  if (batches_per_epoch < 1) throw ConfigError("adapt.batches_per_epoch must be at least 1");
  if (grad_transform.kind == GradTransform::Kind::clip_norm && !(grad_transform.max_norm > 0.0)) {
    throw ConfigError("adapt.grad_transform.max_norm must be positive");
  }
}

void AdaptConfig::validate_for(std::size_t trunk_layers) const {
  validate();
  if (trunk_layers > 0 && alphas.size() != trunk_layers) {
    throw ConfigError("adapt.alphas has " + std::to_string(alphas.size()) + " entries for " +
                      std::to_string(trunk_layers) + " trunk layers");
  }
}

std::string AdaptConfig::to_json() const {
  JsonWriter w;
  write(w);
  return w.str();
}

void AdaptConfig::write(JsonWriter& w) const {
  w.begin_object();
  w.key("beta").value(beta);
  w.key("alphas").array(alphas);
  w.key("gammas").array(gammas);
  w.key("inner_steps").value(static_cast<std::uint64_t>(inner_steps));
  w.key("eval_inner_steps").value(static_cast<std::uint64_t>(eval_inner_steps));
  w.key("epochs").value(static_cast<std::uint64_t>(epochs));
  w.key("batches_per_epoch").value(static_cast<std::uint64_t>(batches_per_epoch));
  w.key("optimizer").value(to_string(optimizer));
  w.key("grad_transform").begin_object();
  w.key("kind").value(grad_transform.kind == GradTransform::Kind::identity ? "identity" : "clip_norm");
  w.key("max_norm").value(grad_transform.max_norm);
  w.end_object();
  w.key("joint_phase1").value(joint_phase1);
  w.end_object();
}

AdaptConfig AdaptConfig::from_json(const nlohmann::json& j) {
  AdaptConfig c;
  if (!j.is_object()) throw ConfigError("adapt config must be a JSON object");
  auto field = [&](const char* name, auto& out) {
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(out);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("adapt.") + name + " has the wrong type");
    }
  };
  field("beta", c.beta);
  field("alphas", c.alphas);
  field("gammas", c.gammas);
  field("inner_steps", c.inner_steps);
  c.eval_inner_steps = c.inner_steps;
  field("eval_inner_steps", c.eval_inner_steps);
  field("epochs", c.epochs);
  field("batches_per_epoch", c.batches_per_epoch);
  field("joint_phase1", c.joint_phase1);
  if (j.contains("optimizer")) {
    std::string o;
    field("optimizer", o);
    if (o == "adam") {
      c.optimizer = Optimizer::adam;
    } else if (o == "sgd") {
      c.optimizer = Optimizer::sgd;
    } else {
      throw ConfigError("adapt.optimizer must be adam or sgd, got '" + o + "'");
    }
  }
  if (j.contains("grad_transform")) {
    const auto& g = j.at("grad_transform");
    std::string kind = g.value("kind", std::string("clip_norm"));
    if (kind == "identity") {
      c.grad_transform.kind = GradTransform::Kind::identity;
    } else if (kind == "clip_norm") {
      c.grad_transform.kind = GradTransform::Kind::clip_norm;
    } else {
      throw ConfigError("adapt.grad_transform.kind must be identity or clip_norm, got '" + kind + "'");
    }
    if (g.contains("max_norm")) {
      if (!g.at("max_norm").is_number()) throw ConfigError("adapt.grad_transform.max_norm has the wrong type");
      c.grad_transform.max_norm = g.at("max_norm").get<double>();
    }
  }
  c.validate();
  return c;
}

}  // namespace driftbench::adapt
