// SPDX-License-Identifier: Apache-2.0
#include "driftbench/model/checkpoint.hpp"

#include <json.hpp>
#include <map>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::model {
namespace {

constexpr const char* kFormat = "driftbench-checkpoint/1";

}  // namespace

std::string checkpoint_to_json(const Model& m) {
  const ModelConfig& c = m.config();
  const ArchitectureSpec& a = c.arch;
  JsonWriter w;
  w.begin_object();
  w.key("format").value(kFormat);
  w.key("variant").value(to_string(c.variant));
  w.key("arch").begin_object();
  w.key("backbone").value(to_string(a.backbone));
  w.key("L").value(static_cast<std::uint64_t>(a.L));
  w.key("M").value(static_cast<std::uint64_t>(a.M));
  w.key("input_len").value(static_cast<std::uint64_t>(a.input_len));
  w.key("output_len").value(static_cast<std::uint64_t>(a.output_len));
  w.key("patch_len").value(static_cast<std::uint64_t>(a.patch_len));
  w.key("latent_dim").value(static_cast<std::uint64_t>(a.latent_dim));
  w.key("layer_norm").value(a.layer_norm);
  w.key("ln_eps").value(a.ln_eps);
  w.key("activation").value(to_string(a.activation));
  w.end_object();
  w.key("lora").begin_object();
  w.key("rank").value(static_cast<std::uint64_t>(c.lora_rank));
  w.key("scale").value(c.lora_scale);
  w.end_object();
  w.key("tensors").begin_array();
  for (const NamedTensor& nt : const_cast<Model&>(m).named_parameters()) {
    std::vector<std::int64_t> shape(nt.tensor->shape().begin(), nt.tensor->shape().end());
    w.begin_object();
    w.key("name").value(nt.name);
    w.key("shape").array(std::span<const std::int64_t>(shape));
    w.key("data").array(nt.tensor->data());
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

Model checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("unsupported checkpoint format");
    ModelConfig c;
    c.variant = parse_variant_tag(j.at("variant").get<std::string>());
    const auto& a = j.at("arch");
    c.arch.backbone = parse_backbone(a.at("backbone").get<std::string>());
    c.arch.L = a.at("L").get<std::size_t>();
    c.arch.M = a.at("M").get<std::size_t>();
    c.arch.input_len = a.at("input_len").get<std::size_t>();
    c.arch.output_len = a.at("output_len").get<std::size_t>();
    c.arch.patch_len = a.at("patch_len").get<std::size_t>();
    c.arch.latent_dim = a.at("latent_dim").get<std::size_t>();
    c.arch.layer_norm = a.at("layer_norm").get<bool>();
    c.arch.ln_eps = a.at("ln_eps").get<double>();
    c.arch.activation = parse_activation(a.at("activation").get<std::string>());
    c.lora_rank = j.at("lora").at("rank").get<std::size_t>();
    c.lora_scale = j.at("lora").at("scale").get<double>();

    Rng rng(0);
    Model m(c, rng);
    std::map<std::string, const nlohmann::json*> stored;
    for (const auto& t : j.at("tensors")) stored[t.at("name").get<std::string>()] = &t;
    auto params = m.named_parameters();
    if (stored.size() != params.size()) throw ConfigError("checkpoint tensor count does not match the model");
    for (const NamedTensor& nt : params) {
      auto it = stored.find(nt.name);
      if (it == stored.end()) throw ConfigError("checkpoint is missing tensor " + nt.name);
      const auto shape = it->second->at("shape").get<std::vector<std::size_t>>();
      if (nd::Shape(shape.begin(), shape.end()) != nt.tensor->shape()) {
        throw DimensionError("checkpoint tensor " + nt.name + " has shape " + nd::shape_str(shape) + ", expected " +
                             nd::shape_str(nt.tensor->shape()));
      }
      const auto data = it->second->at("data").get<std::vector<double>>();
      if (data.size() != nt.tensor->size()) throw DimensionError("checkpoint tensor " + nt.name + " has wrong length");
      std::copy(data.begin(), data.end(), nt.tensor->data().begin());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& m, const std::string& path) { write_text_file(path, checkpoint_to_json(m)); }

Model load_checkpoint(const std::string& path) { return checkpoint_from_json(read_text_file(path)); }

}  // namespace driftbench::model
