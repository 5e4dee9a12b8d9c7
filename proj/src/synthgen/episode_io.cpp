// SPDX-License-Identifier: Apache-2.0
#include "driftbench/synthgen/episode_io.hpp"

#include <json.hpp>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::synth {
namespace {

constexpr const char* kFormat = "driftbench-episodes/1";

void write_pairs(JsonWriter& w, const std::vector<WindowPair>& pairs) {
  w.begin_array();
  for (const WindowPair& p : pairs) {
    w.begin_array();
    w.array(p.input);
    w.array(p.output);
    w.end_array();
  }
  w.end_array();
}

std::vector<WindowPair> read_pairs(const nlohmann::json& j, const DatasetSpec& spec) {
  std::vector<WindowPair> out;
  for (const auto& pair : j) {
    WindowPair p{pair.at(0).get<std::vector<double>>(), pair.at(1).get<std::vector<double>>()};
    if (p.input.size() != spec.input_len || p.output.size() != spec.output_len) {
      throw DimensionError("episode window lengths do not match the dataset header");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::string episodes_to_json(const EpisodeSet& set) {
  JsonWriter w;
  w.begin_object();
  w.key("format").value(kFormat);
  w.key("variant").value(to_string(set.spec.variant));
  w.key("seed").value(set.spec.seed);
  w.key("spec").begin_object();
  w.key("pool_size").value(static_cast<std::uint64_t>(set.spec.pool_size));
  w.key("dt").value(set.spec.dt);
  w.key("input_len").value(static_cast<std::uint64_t>(set.spec.input_len));
  w.key("output_len").value(static_cast<std::uint64_t>(set.spec.output_len));
  w.key("window_stride").value(static_cast<std::uint64_t>(set.spec.window_stride));
  w.key("offset_range").value(static_cast<std::uint64_t>(set.spec.offset_range));
  w.end_object();
  w.key("pool").begin_array();
  for (const BaseSequence& seq : set.pool) {
    w.begin_object();
    w.key("id").value(static_cast<std::uint64_t>(seq.id));
    w.key("components").begin_array();
    for (const SineComponent& c : seq.components) {
      w.begin_object();
      w.key("amplitude").value(c.amplitude);
      w.key("period").value(c.period);
      w.key("phase").value(c.phase);
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.key("episodes").begin_array();
  for (const Episode& ep : set.episodes) {
    w.begin_object();
    w.key("source_i").value(static_cast<std::uint64_t>(ep.source_i));
    w.key("source_j").value(static_cast<std::uint64_t>(ep.source_j));
    w.key("offsets").array(std::span<const std::int64_t>(ep.offsets));
    w.key("support");
    write_pairs(w, ep.support);
    w.key("query");
    write_pairs(w, ep.query);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

EpisodeSet episodes_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("episode file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("unsupported episode file format");
    EpisodeSet set;
    set.spec.variant = parse_variant(j.at("variant").get<std::string>());
    set.spec.seed = j.at("seed").get<std::uint64_t>();
    const auto& s = j.at("spec");
    set.spec.pool_size = s.at("pool_size").get<std::size_t>();
    set.spec.dt = s.at("dt").get<double>();
    set.spec.input_len = s.at("input_len").get<std::size_t>();
    set.spec.output_len = s.at("output_len").get<std::size_t>();
    set.spec.window_stride = s.at("window_stride").get<std::size_t>();
    set.spec.offset_range = s.at("offset_range").get<std::size_t>();
    set.spec.validate();
    for (const auto& q : j.at("pool")) {
      BaseSequence seq;
      seq.id = q.at("id").get<std::size_t>();
      for (const auto& c : q.at("components")) {
        seq.components.push_back(
            {c.at("amplitude").get<double>(), c.at("period").get<double>(), c.at("phase").get<double>()});
      }
      set.pool.push_back(std::move(seq));
    }
    for (const auto& e : j.at("episodes")) {
      Episode ep;
      ep.source_i = e.at("source_i").get<std::size_t>();
      ep.source_j = e.at("source_j").get<std::size_t>();
      const auto offsets = e.at("offsets").get<std::vector<std::int64_t>>();
      if (offsets.size() != kWindowsPerEpisode) throw DimensionError("episode must list 10 offsets");
      std::copy(offsets.begin(), offsets.end(), ep.offsets.begin());
      ep.support = read_pairs(e.at("support"), set.spec);
      ep.query = read_pairs(e.at("query"), set.spec);
      if (ep.support.size() != kSupportSize || ep.query.size() != kSupportSize) {
        throw DimensionError("episode must hold 5 support and 5 query pairs");
      }
      set.episodes.push_back(std::move(ep));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed episode file: ") + e.what());
  }
}

void write_episode_file(const EpisodeSet& set, const std::string& path) {
  write_text_file(path, episodes_to_json(set));
}

EpisodeSet read_episode_file(const std::string& path) { return episodes_from_json(read_text_file(path)); }

}  // namespace driftbench::synth
