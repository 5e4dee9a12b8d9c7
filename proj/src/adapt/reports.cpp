// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include "driftbench/adapt/loop.hpp"
#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::adapt {

std::string RunLog::to_json() const {
  JsonWriter w;
  w.begin_object();
  w.key("variant").value(variant);
  w.key("seed").value(seed);
  w.key("config");
  config.write(w);
  w.key("epochs").value(static_cast<std::uint64_t>(epoch_query_loss.size()));
  w.key("episodes").value(static_cast<std::uint64_t>(episode_query_mse.size()));
  w.key("epoch_support_loss").array(epoch_support_loss);
  w.key("epoch_query_loss").array(epoch_query_loss);
  w.key("episode_query_mse").array(episode_query_mse);
  w.end_object();
  return w.str() + "\n";
}

std::string EvalReport::to_json() const {
  JsonWriter w;
  w.begin_object();
  w.key("dataset").value(dataset);
  w.key("variant").value(variant);
  w.key("eval_seed").value(eval_seed);
  w.key("episodes").value(static_cast<std::uint64_t>(episodes));
  w.key("mean_mse").value(mean_mse);
  w.key("std_mse").value(std_mse);
  w.key("records").begin_array();
  for (const EpisodeRecord& r : records) {
    w.begin_object();
    w.key("index").value(static_cast<std::uint64_t>(r.index));
    w.key("query_mse").value(r.query_mse);
    w.key("support_mse_before").value(r.support_mse_before);
    w.key("support_mse_after").value(r.support_mse_after);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.eval_seed = j.at("eval_seed").get<std::uint64_t>();
    r.episodes = j.at("episodes").get<std::size_t>();
    r.mean_mse = j.at("mean_mse").get<double>();
    r.std_mse = j.at("std_mse").get<double>();
    for (const auto& e : j.at("records")) {
      r.records.push_back({e.at("index").get<std::size_t>(), e.at("query_mse").get<double>(),
                           e.at("support_mse_before").get<double>(), e.at("support_mse_after").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed eval report: ") + e.what());
  }
}

}  // namespace driftbench::adapt
