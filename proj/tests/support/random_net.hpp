// SPDX-License-Identifier: Apache-2.0
// Random LayerNorm/ReLU MLPs for gradient checks.
#pragma once

#include <cmath>
#include <vector>

#include "driftbench/common/rng.hpp"
#include "driftbench/ndcore/gradcheck.hpp"
#include "driftbench/ndcore/ops.hpp"

namespace driftbench::testing {

struct RandomNet {
  struct Layer {
    nd::Tensor w, b, gain, shift;
  };
  nd::Tensor input;
  nd::Tensor target;
  std::vector<Layer> layers;  // last layer has no norm/activation
  double eps = 1e-5;

  std::vector<nd::Tensor*> params() {
    std::vector<nd::Tensor*> out;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      out.push_back(&layers[k].w);
      out.push_back(&layers[k].b);
      if (k + 1 < layers.size()) {
        out.push_back(&layers[k].gain);
        out.push_back(&layers[k].shift);
      }
    }
    return out;
  }

  /// Builds the loss on `tape`; records the smallest |pre-activation| seen.
  nd::Var loss(nd::Tape& tape, double* min_kink = nullptr) {
    nd::Var h = tape.constant_ref(input);
    double kink = INFINITY;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      Layer& l = layers[k];
      h = nd::affine(h, tape.parameter(l.w), tape.parameter(l.b));
      if (k + 1 == layers.size()) break;
      h = nd::layer_norm(h, tape.parameter(l.gain), tape.parameter(l.shift), eps);
      for (double v : h.value().data()) kink = std::min(kink, std::abs(v));
      h = nd::relu(h);
    }
    if (min_kink) *min_kink = kink;
    return nd::mse_loss(h, tape.constant_ref(target));
  }
};

inline nd::Tensor random_tensor(Rng& rng, nd::Shape shape, double lo, double hi) {
  nd::Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// depth in [1, 4] affine layers, widths in [2, 16], batch in [1, 4].
inline RandomNet make_random_net(Rng& rng) {
  RandomNet net;
  const std::size_t depth = 1 + rng.below(4);
  const std::size_t batch = 1 + rng.below(4);
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k <= depth; ++k) widths.push_back(2 + rng.below(15));
  net.input = random_tensor(rng, {batch, widths[0]}, -1.0, 1.0);
  net.target = random_tensor(rng, {batch, widths[depth]}, -1.0, 1.0);
  for (std::size_t k = 0; k < depth; ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k]));
    RandomNet::Layer l;
    l.w = random_tensor(rng, {widths[k], widths[k + 1]}, -bound, bound);
    l.b = random_tensor(rng, {widths[k + 1]}, -bound, bound);
    l.gain = random_tensor(rng, {widths[k + 1]}, 0.5, 1.5);
    l.shift = random_tensor(rng, {widths[k + 1]}, -0.5, 0.5);
    net.layers.push_back(std::move(l));
  }
  return net;
}

/// Draws nets until every pre-activation sits at least `margin` from the kink.
inline RandomNet make_kink_free_net(Rng& rng, double margin = 1e-3) {
  for (;;) {
    RandomNet net = make_random_net(rng);
    nd::Tape tape;
    double kink = 0.0;
    net.loss(tape, &kink);
    if (kink >= margin) return net;
  }
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

/// Compares tape gradients with central differences on every coordinate
/// whose analytic gradient exceeds `floor` in magnitude.
inline GradCheckResult check_net_gradients(RandomNet& net, double h = 1e-5, double floor = 1e-6) {
  GradCheckResult res;
  {
    nd::Tape tape;
    tape.backward(net.loss(tape));
  }
  for (nd::Tensor* p : net.params()) {
    std::vector<double> analytic(p->grad().begin(), p->grad().end());
    std::vector<double> saved(p->data().begin(), p->data().end());
    auto f = [&](std::span<const double> theta) {
      std::copy(theta.begin(), theta.end(), p->data().begin());
      nd::Tape tape;
      return net.loss(tape).value().item();
    };
    std::vector<double> numeric = nd::finite_diff_grad(f, saved, h);
    std::copy(saved.begin(), saved.end(), p->data().begin());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      if (std::abs(analytic[i]) <= floor) continue;
      res.max_rel_err = std::max(res.max_rel_err, nd::relative_error(analytic[i], numeric[i]));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace driftbench::testing
