// SPDX-License-Identifier: Apache-2.0
#include "driftbench/ndcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/common/errors.hpp"

namespace driftbench::nd {

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
  std::vector<double> probe(theta.begin(), theta.end());
  std::vector<double> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    probe[k] = theta[k] + h;
    const double up = f(probe);
    probe[k] = theta[k] - h;
    const double down = f(probe);
    probe[k] = theta[k];
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace driftbench::nd
