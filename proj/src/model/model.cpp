// SPDX-License-Identifier: Apache-2.0
#include "driftbench/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/hash.hpp"
#include "driftbench/ndcore/ops.hpp"

namespace driftbench::model {

using nd::Tape;
using nd::Tensor;
using nd::Var;

std::string_view to_string(VariantTag v) {
  switch (v) {
    case VariantTag::dynamic: return "dynamic";
    case VariantTag::static_: return "static";
    case VariantTag::init_all: return "init-all";
    case VariantTag::lora: return "lora";
  }
  return "?";
}

VariantTag parse_variant_tag(std::string_view s) {
  if (s == "dynamic") return VariantTag::dynamic;
  if (s == "static") return VariantTag::static_;
  if (s == "init-all" || s == "init_all") return VariantTag::init_all;
  if (s == "lora") return VariantTag::lora;
  throw ConfigError("unknown model variant '" + std::string(s) + "'");
}

std::string_view to_string(Backbone b) { return b == Backbone::kunet ? "kunet" : "linear"; }

Backbone parse_backbone(std::string_view s) {
  if (s == "kunet") return Backbone::kunet;
  if (s == "linear") return Backbone::linear;
  throw ConfigError("unknown backbone '" + std::string(s) + "'");
}

ArchitectureSpec ArchitectureSpec::linear(std::size_t input_len, std::size_t output_len) {
  ArchitectureSpec a;
  a.backbone = Backbone::linear;
  a.L = 0;
  a.M = 1;
  a.input_len = input_len;
  a.output_len = output_len;
  a.layer_norm = false;
  return a;
}

std::vector<std::size_t> ArchitectureSpec::dims() const {
  std::vector<std::size_t> d{input_len};
  if (backbone == Backbone::linear) {
    d.push_back(output_len);
    return d;
  }
  const std::size_t p = patches();
  for (std::size_t k = 0; k < L; ++k) d.push_back((p >> k) * latent_dim);
  const std::size_t bottleneck = (p >> (L - 1)) * latent_dim;
  for (std::size_t j = 0; j + 1 < M; ++j) d.push_back(bottleneck);
  d.push_back(output_len);
  return d;
}

void ArchitectureSpec::validate() const {
  if (input_len == 0 || output_len == 0) throw ConfigError("input_len and output_len must be positive");
  if (backbone == Backbone::linear) {
    if (L != 0 || M != 1) throw ConfigError("linear backbone has L = 0, M = 1");
    return;
  }
  if (L < 1 || M < 1) throw ConfigError("kunet needs L >= 1 and M >= 1");
  if (patch_len == 0 || input_len % patch_len != 0) {
    throw ConfigError("input_len " + std::to_string(input_len) + " is not divisible by patch_len " +
                      std::to_string(patch_len));
  }
  if (L > 63 || patches() % (std::size_t{1} << (L - 1)) != 0) {
    throw ConfigError(std::to_string(patches()) + " patches cannot be merged pairwise over " + std::to_string(L) +
                      " levels");
  }
  if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
  if (layer_norm && latent_dim < 2) throw ConfigError("layer norm needs latent_dim >= 2");
  if (!(ln_eps > 0.0)) throw ConfigError("ln_eps must be positive");
}

namespace {

LayerParams make_layer(std::size_t d_in, std::size_t d_out, bool norm, Rng& rng) {
  LayerParams p = LayerParams::zeros(d_in, d_out, norm);
  InitSpec::for_fan_in(d_in).draw(p, rng);
  return p;
}

void draw_adapter(LoraAdapter& a, Rng& rng) {
  const std::size_t d_in = a.down.rows();
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (double& v : a.down.data()) v = rng.uniform(-bound, bound);
  for (double& v : a.up.data()) v = 0.0;
}

const char* const kTensorNames[] = {"weight", "bias", "ln_gain", "ln_shift"};

}  // namespace

Model::Model(const ModelConfig& config, Rng& rng) : config_(config) {
  const ArchitectureSpec& a = config_.arch;
  a.validate();
  if (a.backbone == Backbone::kunet) {
    for (std::size_t k = 0; k < a.L; ++k) {
      const std::size_t d_in = k == 0 ? a.patch_len : 2 * a.latent_dim;
      TrunkLayerParams layer;
      layer.phi = make_layer(d_in, a.latent_dim, a.layer_norm, rng);
      if (config_.variant == VariantTag::dynamic) layer.theta = LayerParams::zeros_like(layer.phi);
      trunk_.push_back(std::move(layer));
    }
    for (std::size_t j = 0; j + 1 < a.M; ++j) {
      BranchLayerParams layer{make_layer(a.latent_dim, a.latent_dim, a.layer_norm, rng),
                              InitSpec::for_fan_in(a.latent_dim)};
      branch_.push_back(std::move(layer));
    }
    const std::size_t head_in = ((a.patches() >> (a.L - 1)) + a.patches()) * a.latent_dim;
    branch_.push_back({make_layer(head_in, a.output_len, false, rng), InitSpec::for_fan_in(head_in)});
  } else {
    if (config_.variant == VariantTag::dynamic) throw ConfigError("the linear backbone has no trunk to perturb");
    branch_.push_back({make_layer(a.input_len, a.output_len, false, rng), InitSpec::for_fan_in(a.input_len)});
  }
  if (config_.variant == VariantTag::lora) {
    auto add_adapter = [&](const Tensor& w) {
      const std::size_t d_in = w.rows(), d_out = w.cols();
      if (config_.lora_rank == 0 || config_.lora_rank >= std::min(d_in, d_out)) {
        throw ConfigError("lora rank " + std::to_string(config_.lora_rank) + " does not fit a " +
                          std::to_string(d_in) + "x" + std::to_string(d_out) + " weight");
      }
      LoraAdapter ad{Tensor({d_in, config_.lora_rank}), Tensor({config_.lora_rank, d_out}), config_.lora_rank,
                     config_.lora_scale};
      draw_adapter(ad, rng);
      adapters_.push_back(std::move(ad));
    };
    for (const auto& t : trunk_) add_adapter(t.phi.weight);
    for (const auto& b : branch_) add_adapter(b.psi.weight);
  }
}

Var Model::forward_impl(Tape& tape, Var x, GroupMask grads, const ForwardOptions& opts, bool trunk_only) const {
  const ArchitectureSpec& a = config_.arch;
  auto bind = [&](const Tensor& t, ParamGroup g) {
    // Parameters are only bound through the non-const forward().
    return (grads & g) ? tape.parameter(const_cast<Tensor&>(t)) : tape.constant_ref(t);
  };
  struct Bound {
    Var w, b, g, s;
  };
  auto bind_layer = [&](const LayerParams& p, ParamGroup group) {
    Bound out;
    out.w = bind(p.weight, group);
    out.b = bind(p.bias, group);
    if (p.has_norm()) {
      out.g = bind(p.ln_gain, group);
      out.s = bind(p.ln_shift, group);
    }
    return out;
  };
  auto adapted = [&](Bound l, std::size_t layer_index) {
    if (adapters_.empty()) return l;
    const LoraAdapter& ad = adapters_[layer_index];
    Var delta = nd::matmul(bind(ad.down, kAdapter), bind(ad.up, kAdapter));
    l.w = nd::add(l.w, nd::scale(delta, ad.scale));
    return l;
  };
  auto apply = [&](Var h, const Bound& l, bool norm, bool activate) {
    h = nd::affine(h, l.w, l.b);
    if (norm) h = nd::layer_norm(h, l.g, l.s, a.ln_eps);
    if (activate) h = a.activation == Activation::relu ? nd::relu(h) : nd::tanh(h);
    return h;
  };

  const nd::Shape& xs = x.shape();
  const std::size_t width = xs.size() == 2 ? xs[1] : (xs.size() == 1 ? xs[0] : 0);
  if (width != a.input_len) {
    throw DimensionError("layer 0 (" + std::string(a.backbone == Backbone::linear ? "branch" : "trunk") +
                         "): expected input width " + std::to_string(a.input_len) + ", got shape " +
                         nd::shape_str(xs));
  }
  const bool flat_input = xs.size() == 1;
  const std::size_t n = flat_input ? 1 : xs[0];
  if (flat_input) x = nd::reshape(x, {1, a.input_len});
  auto shaped = [&](Var y) { return flat_input && !trunk_only ? nd::reshape(y, {a.output_len}) : y; };

  if (a.backbone == Backbone::linear) {
    if (trunk_only) return x;
    return shaped(apply(x, adapted(bind_layer(branch_[0].psi, kPsi), 0), false, false));
  }

  const std::size_t p = a.patches();
  Var h = nd::reshape(x, {n * p, a.patch_len});
  Var enc0;
  for (std::size_t k = 0; k < trunk_.size(); ++k) {
    if (k > 0) h = nd::reshape(h, {n * (p >> k), 2 * a.latent_dim});
    const TrunkLayerParams& layer = trunk_[k];
    Bound l = bind_layer(layer.phi, kPhi);
    if (layer.has_theta()) {
      Bound t = bind_layer(layer.theta, kTheta);
      l.w = nd::add(l.w, t.w);
      l.b = nd::add(l.b, t.b);
      if (layer.phi.has_norm()) {
        l.g = nd::add(l.g, t.g);
        l.s = nd::add(l.s, t.s);
      }
    }
    h = apply(h, adapted(l, k), layer.phi.has_norm(), true);
    if (k == 0) enc0 = h;
  }
  if (trunk_only) return h;

  const std::size_t bottleneck = p >> (trunk_.size() - 1);
  for (std::size_t j = 0; j + 1 < branch_.size(); ++j) {
    h = apply(h, adapted(bind_layer(branch_[j].psi, kPsi), trunk_.size() + j), branch_[j].psi.has_norm(), true);
  }
  Var flat = nd::reshape(h, {n, bottleneck * a.latent_dim});
  Var skip = nd::reshape(enc0, {n, p * a.latent_dim});
  if (opts.skip_scale != 1.0) skip = nd::scale(skip, opts.skip_scale);
  Var cat = nd::concat_cols({flat, skip});
  const std::size_t head = branch_.size() - 1;
  return shaped(apply(cat, adapted(bind_layer(branch_[head].psi, kPsi), trunk_.size() + head), false, false));
}

Var Model::forward(Tape& tape, Var x, GroupMask grads) { return forward_impl(tape, x, grads, {}, false); }

Tensor Model::predict(const Tensor& x, const ForwardOptions& opts) const {
  Tape tape;
  return forward_impl(tape, tape.constant_ref(x), 0, opts, false).value();
}

Tensor Model::trunk_features(const Tensor& x) const {
  Tape tape;
  return forward_impl(tape, tape.constant_ref(x), 0, {}, true).value();
}

void Model::reinit_branch(Rng& rng) {
  if (config_.variant != VariantTag::dynamic) {
    throw ContractError("reinit_branch applies to the dynamic variant, not " + std::string(to_string(variant())));
  }
  for (auto& b : branch_) b.init.draw(b.psi, rng);
}

void Model::reinit_all(Rng& rng) {
  if (config_.variant != VariantTag::init_all) {
    throw ContractError("reinit_all applies to the init-all variant, not " + std::string(to_string(variant())));
  }
  for (auto& t : trunk_) InitSpec::for_fan_in(t.phi.weight.rows()).draw(t.phi, rng);
  for (auto& b : branch_) b.init.draw(b.psi, rng);
}

void Model::reinit_adapters(Rng& rng) {
  if (config_.variant != VariantTag::lora) {
    throw ContractError("reinit_adapters applies to the lora variant, not " + std::string(to_string(variant())));
  }
  for (auto& ad : adapters_) draw_adapter(ad, rng);
}

void Model::reinit_adaptable(Rng& rng) {
  switch (config_.variant) {
    case VariantTag::dynamic: reinit_branch(rng); break;
    case VariantTag::init_all: reinit_all(rng); break;
    case VariantTag::lora: reinit_adapters(rng); break;
    case VariantTag::static_: break;
  }
}

GroupMask Model::adaptable_groups(bool joint_phase1) const {
  switch (config_.variant) {
    case VariantTag::dynamic: return joint_phase1 ? (kPsi | kTheta) : kPsi;
    case VariantTag::init_all: return kPhi | kPsi;
    case VariantTag::lora: return kAdapter;
    case VariantTag::static_: return 0;
  }
  return 0;
}

std::vector<NamedTensor> Model::named_parameters() {
  std::vector<NamedTensor> out;
  auto add_layer = [&](const std::string& prefix, LayerParams& p, ParamGroup g) {
    auto ts = p.tensors();
    for (std::size_t k = 0; k < ts.size(); ++k) out.push_back({prefix + kTensorNames[k], ts[k], g});
  };
  for (std::size_t k = 0; k < trunk_.size(); ++k) {
    add_layer("trunk." + std::to_string(k) + ".phi.", trunk_[k].phi, kPhi);
    if (trunk_[k].has_theta()) add_layer("trunk." + std::to_string(k) + ".theta.", trunk_[k].theta, kTheta);
  }
  for (std::size_t j = 0; j < branch_.size(); ++j) add_layer("branch." + std::to_string(j) + ".psi.", branch_[j].psi, kPsi);
  for (std::size_t k = 0; k < adapters_.size(); ++k) {
    out.push_back({"adapter." + std::to_string(k) + ".down", &adapters_[k].down, kAdapter});
    out.push_back({"adapter." + std::to_string(k) + ".up", &adapters_[k].up, kAdapter});
  }
  return out;
}

std::vector<Tensor*> Model::group_tensors(GroupMask groups) {
  std::vector<Tensor*> out;
  for (const NamedTensor& nt : named_parameters()) {
    if (groups & nt.group) out.push_back(nt.tensor);
  }
  return out;
}

std::vector<const Tensor*> Model::group_tensors(GroupMask groups) const {
  std::vector<const Tensor*> out;
  for (Tensor* t : const_cast<Model*>(this)->group_tensors(groups)) out.push_back(t);
  return out;
}

std::uint64_t Model::group_hash(GroupMask groups) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor* t : group_tensors(groups)) h = fnv1a(t->data(), h);
  return h;
}

ParamAudit Model::audit() const {
  ParamAudit r;
  for (const NamedTensor& nt : const_cast<Model*>(this)->named_parameters()) {
    const std::size_t c = nt.tensor->size();
    switch (nt.group) {
      case kPhi: r.phi += c; break;
      case kTheta: r.theta += c; break;
      case kPsi: r.psi += c; break;
      case kAdapter: r.adapter += c; break;
    }
    r.total += c;
  }
  std::size_t layer_sum = 0;
  for (const auto& t : trunk_) {
    layer_sum += t.phi.count();
    if (t.has_theta()) {
      auto p = t.phi.tensors();
      auto q = t.theta.tensors();
      if (p.size() != q.size()) throw ContractError("theta layout differs from phi");
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k]->shape() != q[k]->shape()) throw ContractError("theta shape differs from phi");
      }
    }
    if (t.has_theta() != (config_.variant == VariantTag::dynamic)) {
      throw ContractError("theta blocks must exist exactly for the dynamic variant");
    }
  }
  for (const auto& b : branch_) layer_sum += b.psi.count();
  const std::size_t expected_adapters = config_.variant == VariantTag::lora ? trunk_.size() + branch_.size() : 0;
  if (adapters_.size() != expected_adapters) throw ContractError("adapter count does not match the layer count");
  r.budget = r.phi + r.psi;
  if (r.budget != layer_sum) throw ContractError("parameter budget does not match the layer sum");
  if (r.total != r.phi + r.theta + r.psi + r.adapter) throw ContractError("parameter groups do not cover the total");
  if (config_.variant == VariantTag::dynamic && r.theta != r.phi) throw ContractError("theta count differs from phi");
  return r;
}

}  // namespace driftbench::model
