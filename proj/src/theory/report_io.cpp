// SPDX-License-Identifier: Apache-2.0
#include "driftbench/theory/report_io.hpp"

#include <json.hpp>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::theory {

std::string to_json(const PLProbeReport& r) {
  JsonWriter w;
  w.begin_object();
  w.key("probe").value("pl");
  w.key("steps").value(static_cast<std::uint64_t>(r.steps));
  w.key("mu").value(r.mu);
  w.key("L").value(r.L);
  w.key("violations").value(static_cast<std::uint64_t>(r.violations));
  w.key("min_slack").value(r.min_slack);
  w.key("slack_tolerance").value(kSlackTolerance);
  w.key("slack").array(r.slack);
  w.key("gaps").array(r.gaps);
  w.end_object();
  return w.str() + "\n";
}

std::string to_json(const RegretReport& r) {
  JsonWriter w;
  w.begin_object();
  w.key("probe").value("regret");
  w.key("T").value(static_cast<std::uint64_t>(r.T));
  w.key("alpha").value(r.alpha);
  w.key("R_T").value(r.R_T);
  w.key("CV_T").value(r.CV_T);
  w.key("D").value(r.D);
  w.key("G").value(r.G);
  w.key("gaps").array(r.gaps);
  w.key("avg_regret").array(r.avg_regret);
  w.end_object();
  return w.str() + "\n";
}

std::string to_json(const ExpressivityReport& r) {
  JsonWriter w;
  w.begin_object();
  w.key("probe").value("expressivity");
  w.key("budget").value(static_cast<std::uint64_t>(r.budget));
  w.key("episodes").value(static_cast<std::uint64_t>(r.episodes));
  w.key("static_worst_error").value(r.static_worst_error);
  w.key("dynamic_worst_error").value(r.dynamic_worst_error);
  w.key("static_errors").array(r.static_errors);
  w.key("dynamic_errors").array(r.dynamic_errors);
  w.end_object();
  return w.str() + "\n";
}

std::string to_csv(const PLProbeReport& r) {
  std::string out = "t,gap,slack\n";
  for (std::size_t t = 0; t < r.slack.size(); ++t) {
    out += std::to_string(t) + "," + format_double(r.gaps[t]) + "," + format_double(r.slack[t]) + "\n";
  }
  return out;
}

std::string to_csv(const RegretReport& r) {
  std::string out = "t,gap,avg_regret\n";
  for (std::size_t t = 0; t < r.gaps.size(); ++t) {
    out += std::to_string(t) + "," + format_double(r.gaps[t]) + "," + format_double(r.avg_regret[t]) + "\n";
  }
  return out;
}

std::string to_csv(const ExpressivityReport& r) {
  std::string out = "task,static_error,dynamic_error\n";
  for (std::size_t k = 0; k < r.static_errors.size(); ++k) {
    out += std::to_string(k) + "," + format_double(r.static_errors[k]) + "," + format_double(r.dynamic_errors[k]) +
           "\n";
  }
  return out;
}

RegretCalibration calibrate_regret(std::uint64_t seed, std::size_t instances, const std::vector<std::size_t>& horizons,
                                   double headroom) {
  std::vector<RegretReport> runs;
  for (std::size_t T : horizons) {
    for (RegretReport& r : regret_batch(seed, instances, T)) runs.push_back(std::move(r));
  }
  return {seed, instances, horizons, headroom, fit_regret_constants(runs, headroom)};
}

std::string to_json(const RegretCalibration& c) {
  JsonWriter w;
  w.begin_object();
  w.key("note").value("fitted constants; validates growth order, not a specific constant");
  w.key("seed").value(c.seed);
  w.key("instances").value(static_cast<std::uint64_t>(c.instances));
  std::vector<std::int64_t> h(c.horizons.begin(), c.horizons.end());
  w.key("horizons").array(std::span<const std::int64_t>(h));
  w.key("headroom").value(c.headroom);
  w.key("C").value(c.constants.C);
  w.key("C0").value(c.constants.C0);
  w.end_object();
  return w.str() + "\n";
}

RegretCalibration regret_calibration_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RegretCalibration c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.instances = j.at("instances").get<std::size_t>();
    c.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    c.headroom = j.at("headroom").get<double>();
    c.constants.C = j.at("C").get<double>();
    c.constants.C0 = j.at("C0").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed regret calibration: ") + e.what());
  }
}

}  // namespace driftbench::theory
