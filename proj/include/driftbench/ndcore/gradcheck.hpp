// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace driftbench::nd {

/// Central differences (f(θ+h·e_k) − f(θ−h·e_k)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double h);

/// |a − b| / max(|a|, |b|), zero when both are zero.
double relative_error(double a, double b);

}  // namespace driftbench::nd
