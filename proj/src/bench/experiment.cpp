// SPDX-License-Identifier: Apache-2.0
#include "driftbench/bench/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <ostream>
#include <set>

#include "driftbench/bench/manifest.hpp"
#include "driftbench/bench/plots.hpp"
#include "driftbench/bench/table.hpp"
#include "driftbench/common/errors.hpp"
#include "driftbench/common/hash.hpp"
#include "driftbench/common/json_writer.hpp"
#include "driftbench/model/checkpoint.hpp"
#include "driftbench/synthgen/episode_io.hpp"

namespace driftbench::bench {

namespace fs = std::filesystem;

VariantSpec VariantSpec::parse(const std::string& column) {
  const auto slash = column.find('/');
  VariantSpec v;
  v.group = column.substr(0, slash);
  if (slash != std::string::npos) v.backbone = model::parse_backbone(column.substr(slash + 1));
  if (v.group == "dynamic*") {
    v.tag = model::VariantTag::dynamic;
    v.inner_steps = 30;
    v.eval_inner_steps = 30;
  } else {
    v.tag = model::parse_variant_tag(v.group);
  }
  if (v.backbone == model::Backbone::linear && v.tag == model::VariantTag::dynamic) {
    throw ConfigError("column '" + column + "': the linear backbone has no trunk for the dynamic variant");
  }
  return v;
}

std::string VariantSpec::column() const { return group + "/" + std::string(model::to_string(backbone)); }

std::string VariantSpec::dir_name() const {
  std::string g;
  for (char c : group) {
    if (c == '*') {
      g += "-star";
    } else {
      g += c;
    }
  }
  return g + "_" + std::string(model::to_string(backbone));
}

model::ModelConfig VariantSpec::model_config() const {
  model::ModelConfig c;
  c.variant = tag;
  if (backbone == model::Backbone::linear) c.arch = model::ArchitectureSpec::linear();
  return c;
}

adapt::AdaptConfig VariantSpec::adapt_config(const adapt::AdaptConfig& base) const {
  adapt::AdaptConfig c = base;
  if (inner_steps) c.inner_steps = *inner_steps;
  if (eval_inner_steps) c.eval_inner_steps = *eval_inner_steps;
  return c;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (datasets.empty()) throw ConfigError("datasets must list at least one dataset");
  if (variants.empty()) throw ConfigError("variants must list at least one column");
  if (train_episodes < 1) throw ConfigError("train_episodes must be at least 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be at least 1");
  adapt.validate();
  std::set<std::string> columns;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const VariantSpec& v = variants[k];
    if (!columns.insert(v.column()).second) throw ConfigError("variants[" + std::to_string(k) + "] is a duplicate");
    const model::ModelConfig mc = v.model_config();
    try {
      mc.arch.validate();
      v.adapt_config(adapt).validate_for(mc.arch.backbone == model::Backbone::kunet ? mc.arch.L : 0);
    } catch (const ConfigError& e) {
      throw ConfigError("variants[" + std::to_string(k) + "] (" + v.column() + "): " + e.what());
    }
  }
  std::set<std::string> names;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const DatasetEntry& d = datasets[k];
    if (!names.insert(std::string(synth::to_string(d.variant))).second) {
      throw ConfigError("datasets[" + std::to_string(k) + "] is a duplicate");
    }
    if (d.train_path.empty() != d.eval_path.empty()) {
      throw ConfigError("datasets[" + std::to_string(k) + "] needs both train and eval paths or neither");
    }
    for (const std::string& p : {d.train_path, d.eval_path}) {
      if (!p.empty() && !fs::exists(p)) {
        throw ConfigError("datasets[" + std::to_string(k) + "]: file not found: " + p);
      }
    }
  }
}

std::string ExperimentConfig::to_json() const {
  JsonWriter w;
  w.begin_object();
  w.key("data_seed").value(data_seed);
  w.key("eval_seed").value(eval_seed);
  w.key("train_episodes").value(static_cast<std::uint64_t>(train_episodes));
  w.key("eval_episodes").value(static_cast<std::uint64_t>(eval_episodes));
  w.key("seeds").begin_array();
  for (std::uint64_t s : seeds) w.value(s);
  w.end_array();
  w.key("datasets").begin_array();
  for (const DatasetEntry& d : datasets) {
    w.begin_object();
    w.key("name").value(synth::to_string(d.variant));
    if (!d.train_path.empty()) {
      w.key("train").value(d.train_path);
      w.key("eval").value(d.eval_path);
    }
    w.end_object();
  }
  w.end_array();
  w.key("variants").begin_array();
  for (const VariantSpec& v : variants) {
    w.begin_object();
    w.key("column").value(v.column());
    if (v.inner_steps) w.key("inner_steps").value(static_cast<std::uint64_t>(*v.inner_steps));
    if (v.eval_inner_steps) w.key("eval_inner_steps").value(static_cast<std::uint64_t>(*v.eval_inner_steps));
    w.end_object();
  }
  w.end_array();
  w.key("adapt");
  adapt.write(w);
  w.key("plots").value(plots);
  w.end_object();
  return w.str() + "\n";
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_json()); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  auto field = [&](const char* name, auto& out) {
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(out);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string(name) + " has the wrong type");
    }
  };
  field("out_dir", c.out_dir);
  field("data_seed", c.data_seed);
  field("eval_seed", c.eval_seed);
  field("train_episodes", c.train_episodes);
  field("eval_episodes", c.eval_episodes);
  field("seeds", c.seeds);
  field("plots", c.plots);
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };
  if (j.contains("datasets")) {
    for (const auto& d : j.at("datasets")) {
      DatasetEntry e;
      try {
        if (d.is_string()) {
          e.variant = synth::parse_variant(d.get<std::string>());
        } else {
          e.variant = synth::parse_variant(d.at("name").get<std::string>());
          e.train_path = resolve(d.value("train", std::string()));
          e.eval_path = resolve(d.value("eval", std::string()));
        }
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("datasets entries must be names or {name, train, eval} objects");
      }
      c.datasets.push_back(e);
    }
  }
  if (j.contains("variants")) {
    for (const auto& v : j.at("variants")) {
      try {
        if (v.is_string()) {
          c.variants.push_back(VariantSpec::parse(v.get<std::string>()));
        } else {
          VariantSpec s = VariantSpec::parse(v.at("column").get<std::string>());
          if (v.contains("inner_steps")) s.inner_steps = v.at("inner_steps").get<std::size_t>();
          if (v.contains("eval_inner_steps")) s.eval_inner_steps = v.at("eval_inner_steps").get<std::size_t>();
          c.variants.push_back(s);
        }
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("variants entries must be column names or {column, inner_steps, eval_inner_steps} objects");
      }
    }
  }
  if (j.contains("adapt")) c.adapt = adapt::AdaptConfig::from_json(j.at("adapt"));
  if (const char* env = std::getenv("DRIFTBENCH_OUT"); env && *env) c.out_dir = env;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  return from_json(read_text_file(path), fs::path(path).parent_path().string());
}

ExperimentConfig table1_config() {
  ExperimentConfig c;
  for (synth::Variant v : {synth::Variant::s1, synth::Variant::s2, synth::Variant::s3}) c.datasets.push_back({v, "", ""});
  for (const char* col : {"dynamic*/kunet", "dynamic/kunet", "lora/kunet", "init-all/kunet", "init-all/linear",
                          "static/kunet", "static/linear"}) {
    c.variants.push_back(VariantSpec::parse(col));
  }
  return c;
}

std::pair<synth::EpisodeSet, synth::EpisodeSet> load_or_generate(const DatasetEntry& d,
                                                                  const ExperimentConfig& cfg) {
  if (!d.train_path.empty()) {
    return {synth::read_episode_file(d.train_path), synth::read_episode_file(d.eval_path)};
  }
  synth::DatasetSpec spec;
  spec.variant = d.variant;
  spec.seed = cfg.data_seed;
  return {synth::episode_stream(spec, cfg.train_episodes),
          synth::episode_stream(spec, cfg.eval_episodes, cfg.train_episodes)};
}

namespace {

void write_run_config(const std::string& path, const std::string& dataset, const VariantSpec& v, std::uint64_t seed,
                      const adapt::AdaptConfig& cfg) {
  JsonWriter w;
  w.begin_object();
  w.key("dataset").value(dataset);
  w.key("column").value(v.column());
  w.key("seed").value(seed);
  w.key("adapt");
  cfg.write(w);
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks) {
  cfg.validate();
  RunManifest manifest;
  manifest.config_hash = cfg.hash();
  manifest.version = DRIFTBENCH_VERSION;
  manifest.started_at = utc_timestamp();
  const fs::path root(cfg.out_dir);
  std::vector<std::string> files;
  std::vector<adapt::EvalReport> reports;

  for (const DatasetEntry& d : cfg.datasets) {
    const std::string ds(synth::to_string(d.variant));
    auto [train, eval] = load_or_generate(d, cfg);
    if (d.train_path.empty()) {
      for (const auto& [name, set] : {std::pair{"train.json", &train}, std::pair{"eval.json", &eval}}) {
        const std::string rel = "data/" + ds + "/" + name;
        synth::write_episode_file(*set, (root / rel).string());
        files.push_back(rel);
      }
    }
    if (eval.episodes.size() < cfg.eval_episodes) {
      throw ConfigError("dataset " + ds + " holds fewer than eval_episodes evaluation episodes");
    }
    for (const VariantSpec& v : cfg.variants) {
      const adapt::AdaptConfig acfg = v.adapt_config(cfg.adapt);
      for (std::uint64_t seed : cfg.seeds) {
        const auto start = std::chrono::steady_clock::now();
        RunRecord rec;
        rec.dataset = ds;
        rec.column = v.column();
        rec.seed = seed;
        const std::string dir = ds + "/" + v.dir_name() + "/seed_" + std::to_string(seed);
        if (hooks.log) *hooks.log << "run " << ds << " " << v.column() << " seed " << seed << std::flush;

        Rng init_rng(derive_seed(seed, 0));
        model::Model m(v.model_config(), init_rng);
        adapt::PhaseObserver* observer = hooks.observer ? hooks.observer(ds, v.column(), seed) : nullptr;
        const adapt::RunLog log = adapt::train_run(train, m, acfg, derive_seed(seed, 1), observer);
        const adapt::EvalReport rep = adapt::evaluate(eval, m, acfg, cfg.eval_seed, cfg.eval_episodes, v.column());
        reports.push_back(rep);

        rec.run_log = dir + "/run_log.json";
        rec.eval_report = dir + "/eval_report.json";
        rec.checkpoint = dir + "/checkpoint.json";
        rec.config = dir + "/config.json";
        write_text_file((root / rec.run_log).string(), log.to_json());
        write_text_file((root / rec.eval_report).string(), rep.to_json());
        model::save_checkpoint(m, (root / rec.checkpoint).string());
        write_run_config((root / rec.config).string(), ds, v, seed, acfg);
        for (const std::string* f : {&rec.run_log, &rec.eval_report, &rec.checkpoint, &rec.config}) files.push_back(*f);
        if (cfg.plots) {
          rec.plot = dir + "/episode_0.svg";
          const auto pred = adapt::adapt_and_predict(eval.episodes[0], m, acfg, derive_seed(cfg.eval_seed, 0));
          emit_plots(eval.episodes[0], pred, (root / rec.plot).string(), ds + " " + v.column() + " seed " +
                                                                             std::to_string(seed) + ", episode 0");
          files.push_back(rec.plot);
        }
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (hooks.log) {
          *hooks.log << ": mean query MSE " << format_double(rep.mean_mse) << " (" << rec.wall_time_s << " s)"
                     << std::endl;
        }
        manifest.runs.push_back(rec);
      }
    }
  }

  std::vector<std::string> columns;
  for (const VariantSpec& v : cfg.variants) columns.push_back(v.column());
  const ResultsTable table = build_table(reports, columns);
  export_csv(table, (root / "results.csv").string());
  write_text_file((root / "table.md").string(), table_to_markdown(table));
  files.push_back("results.csv");
  files.push_back("table.md");

  for (const std::string& f : files) manifest.files.push_back(hash_entry(root.string(), f));
  manifest.finished_at = utc_timestamp();
  write_text_file((root / "manifest.json").string(), manifest_to_json(manifest));
  return manifest;
}

}  // namespace driftbench::bench
