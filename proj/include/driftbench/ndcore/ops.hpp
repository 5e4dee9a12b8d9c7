// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "driftbench/ndcore/tape.hpp"

namespace driftbench::nd {

/// out = x·W + b for x[n×d_in], W[d_in×d_out], b[d_out].
Var affine(Var x, Var w, Var b);

/// out = a·b for a[n×k], b[k×m].
Var matmul(Var a, Var b);

/// Elementwise sum of equal-shape operands.
Var add(Var a, Var b);

Var scale(Var a, double s);

/// max(0, x); the subgradient at exactly 0 is 0.
Var relu(Var x);
Var tanh(Var x);

/// Row-wise normalization of x[n×d] to zero mean, unit variance
/// (biased variance, eps inside the square root), then gain·x̂ + bias.
Var layer_norm(Var x, Var gain, Var bias, double eps);

/// Same data, new shape (element count must match).
Var reshape(Var x, Shape shape);

/// Column-wise concatenation of rank-2 operands with equal row counts.
Var concat_cols(const std::vector<Var>& parts);

/// Mean of squared elementwise differences, as a scalar.
Var mse_loss(Var pred, Var target);

/// Σ_k gammas[k]·‖blocks[k]‖², as a scalar. A multi-tensor block is passed
/// as consecutive entries sharing the same gamma.
Var l2_penalty(const std::vector<Var>& blocks, std::span<const double> gammas);

}  // namespace driftbench::nd
