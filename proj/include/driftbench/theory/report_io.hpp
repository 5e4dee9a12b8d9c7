// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftbench/theory/probes.hpp"

namespace driftbench::theory {

std::string to_json(const PLProbeReport& r);
std::string to_json(const RegretReport& r);
std::string to_json(const ExpressivityReport& r);

/// Per-step traces: "t,gap,slack" / "t,gap,avg_regret" / "task,static_error,dynamic_error".
std::string to_csv(const PLProbeReport& r);
std::string to_csv(const RegretReport& r);
std::string to_csv(const ExpressivityReport& r);

/// Frozen calibration of regret_bound_check.
struct RegretCalibration {
  std::uint64_t seed = 0;
  std::size_t instances = 0;
  std::vector<std::size_t> horizons;
  double headroom = 0.0;
  RegretConstants constants;
};

RegretCalibration calibrate_regret(std::uint64_t seed, std::size_t instances, const std::vector<std::size_t>& horizons,
                                   double headroom);
std::string to_json(const RegretCalibration& c);
RegretCalibration regret_calibration_from_json(const std::string& text);

}  // namespace driftbench::theory
