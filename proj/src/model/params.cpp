// SPDX-License-Identifier: Apache-2.0
#include "driftbench/model/params.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/common/errors.hpp"

namespace driftbench::model {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

std::size_t LayerParams::count() const {
  return weight.size() + bias.size() + ln_gain.size() + ln_shift.size();
}

std::vector<nd::Tensor*> LayerParams::tensors() {
  std::vector<nd::Tensor*> out{&weight, &bias};
  if (has_norm()) {
    out.push_back(&ln_gain);
    out.push_back(&ln_shift);
  }
  return out;
}

std::vector<const nd::Tensor*> LayerParams::tensors() const {
  std::vector<const nd::Tensor*> out{&weight, &bias};
  if (has_norm()) {
    out.push_back(&ln_gain);
    out.push_back(&ln_shift);
  }
  return out;
}

LayerParams LayerParams::zeros(std::size_t d_in, std::size_t d_out, bool norm) {
  LayerParams p;
  p.weight = nd::Tensor({d_in, d_out});
  p.bias = nd::Tensor({d_out});
  if (norm) {
    p.ln_gain = nd::Tensor({d_out});
    p.ln_shift = nd::Tensor({d_out});
  }
  return p;
}

LayerParams LayerParams::zeros_like(const LayerParams& like) {
  return zeros(like.weight.rows(), like.weight.cols(), like.has_norm());
}

InitSpec InitSpec::for_fan_in(std::size_t fan_in) { return InitSpec{1.0 / std::sqrt(static_cast<double>(fan_in))}; }

void InitSpec::draw(LayerParams& p, Rng& rng) const {
  for (double& w : p.weight.data()) w = rng.uniform(-bound, bound);
  for (double& b : p.bias.data()) b = rng.uniform(-bound, bound);
  if (p.has_norm()) {
    std::fill(p.ln_gain.data().begin(), p.ln_gain.data().end(), 1.0);
    std::fill(p.ln_shift.data().begin(), p.ln_shift.data().end(), 0.0);
  }
}

LayerParams effective_weight(const TrunkLayerParams& layer) {
  LayerParams out = layer.phi;
  if (!layer.has_theta()) return out;
  auto dst = out.tensors();
  auto src = layer.theta.tensors();
  if (dst.size() != src.size()) throw DimensionError("theta block layout differs from phi");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (dst[k]->shape() != src[k]->shape()) throw DimensionError("theta shape differs from phi");
    auto d = dst[k]->data();
    auto s = src[k]->data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  }
  return out;
}

nd::Tensor lora_effective_weight(const nd::Tensor& base, const LoraAdapter& adapter) {
  if (base.rank() != 2) throw DimensionError("lora base must be a matrix");
  const std::size_t d_in = base.rows();
  const std::size_t d_out = base.cols();
  const std::size_t r = adapter.rank;
  if (r == 0 || r >= std::min(d_in, d_out)) {
    throw ConfigError("lora rank " + std::to_string(r) + " must be in [1, min(" + std::to_string(d_in) + ", " +
                      std::to_string(d_out) + "))");
  }
  if (adapter.down.shape() != nd::Shape{d_in, r} || adapter.up.shape() != nd::Shape{r, d_out}) {
    throw DimensionError("lora adapter shapes " + nd::shape_str(adapter.down.shape()) + " and " +
                         nd::shape_str(adapter.up.shape()) + " do not fit base " + nd::shape_str(base.shape()));
  }
  nd::Tensor out = base;
  for (std::size_t i = 0; i < d_in; ++i) {
    for (std::size_t j = 0; j < d_out; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < r; ++k) acc += adapter.down[i * r + k] * adapter.up[k * d_out + j];
      out[i * d_out + j] += adapter.scale * acc;
    }
  }
  return out;
}

}  // namespace driftbench::model
