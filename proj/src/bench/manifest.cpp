// SPDX-License-Identifier: Apache-2.0
#include "driftbench/bench/manifest.hpp"

#include <ctime>
#include <filesystem>
#include <json.hpp>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/hash.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::bench {

namespace fs = std::filesystem;

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_to_json(const RunManifest& m) {
  JsonWriter w;
  w.begin_object();
  w.key("config_hash").value(m.config_hash);
  w.key("version").value(m.version);
  w.key("started_at").value(m.started_at);
  w.key("finished_at").value(m.finished_at);
  w.key("runs").begin_array();
  for (const RunRecord& r : m.runs) {
    w.begin_object();
    w.key("dataset").value(r.dataset);
    w.key("column").value(r.column);
    w.key("seed").value(r.seed);
    w.key("wall_time_s").value(r.wall_time_s);
    w.key("run_log").value(r.run_log);
    w.key("eval_report").value(r.eval_report);
    w.key("checkpoint").value(r.checkpoint);
    w.key("config").value(r.config);
    if (!r.plot.empty()) w.key("plot").value(r.plot);
    w.end_object();
  }
  w.end_array();
  w.key("files").begin_array();
  for (const ManifestFile& f : m.files) {
    w.begin_object();
    w.key("path").value(f.path);
    w.key("sha256").value(f.sha256);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    for (const auto& r : j.at("runs")) {
      RunRecord rec;
      rec.dataset = r.at("dataset").get<std::string>();
      rec.column = r.at("column").get<std::string>();
      rec.seed = r.at("seed").get<std::uint64_t>();
      rec.wall_time_s = r.at("wall_time_s").get<double>();
      rec.run_log = r.at("run_log").get<std::string>();
      rec.eval_report = r.at("eval_report").get<std::string>();
      rec.checkpoint = r.at("checkpoint").get<std::string>();
      rec.config = r.at("config").get<std::string>();
      rec.plot = r.value("plot", std::string());
      m.runs.push_back(rec);
    }
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

ManifestFile hash_entry(const std::string& root, const std::string& relative) {
  return {relative, sha256_file((fs::path(root) / relative).string())};
}

std::vector<std::string> verify_manifest(const std::string& manifest_path) {
  const RunManifest m = manifest_from_json(read_text_file(manifest_path));
  const fs::path root = fs::path(manifest_path).parent_path();
  std::vector<std::string> problems;
  for (const ManifestFile& f : m.files) {
    const fs::path p = root / f.path;
    if (!fs::exists(p)) {
      problems.push_back("missing: " + f.path);
      continue;
    }
    if (sha256_file(p.string()) != f.sha256) problems.push_back("hash mismatch: " + f.path);
  }
  return problems;
}

}  // namespace driftbench::bench
