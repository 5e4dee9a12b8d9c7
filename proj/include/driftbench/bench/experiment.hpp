// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/adapt/config.hpp"
#include "driftbench/adapt/loop.hpp"
#include "driftbench/model/model.hpp"
#include "driftbench/synthgen/generator.hpp"

namespace driftbench::bench {

/// One results-table column, keyed "<group>/<backbone>", e.g. "dynamic*/kunet".
/// The group "dynamic*" is the Dynamic variant with 30 inner steps for
/// training and evaluation unless overridden.
struct VariantSpec {
  std::string group;
  model::Backbone backbone = model::Backbone::kunet;
  model::VariantTag tag = model::VariantTag::dynamic;
  std::optional<std::size_t> inner_steps;
  std::optional<std::size_t> eval_inner_steps;

  static VariantSpec parse(const std::string& column);
  std::string column() const;
  /// Filesystem-safe form of column(): "dynamic*/kunet" → "dynamic-star_kunet".
  std::string dir_name() const;
  model::ModelConfig model_config() const;
  adapt::AdaptConfig adapt_config(const adapt::AdaptConfig& base) const;
};

/// A dataset is generated from (variant, data_seed) unless both file paths
/// are given.
struct DatasetEntry {
  synth::Variant variant = synth::Variant::s1;
  std::string train_path;
  std::string eval_path;
};

struct ExperimentConfig {
  std::string out_dir = "out";
  std::uint64_t data_seed = 1;
  std::uint64_t eval_seed = 1000;
  std::size_t train_episodes = 1000;
  std::size_t eval_episodes = 200;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<DatasetEntry> datasets;
  std::vector<VariantSpec> variants;
  adapt::AdaptConfig adapt;
  bool plots = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Canonical JSON without out_dir; its SHA-256 is the config hash.
  std::string to_json() const;
  std::string hash() const;

  /// Relative dataset paths resolve against `base_dir`. DRIFTBENCH_OUT, when
  /// set, replaces out_dir.
  static ExperimentConfig from_json(const std::string& text, const std::string& base_dir = ".");
  static ExperimentConfig load(const std::string& path);
};

/// The desk-scale Table 1 protocol: S1–S3, seven columns, three seeds.
ExperimentConfig table1_config();

struct RunRecord {
  std::string dataset;
  std::string column;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::string run_log;
  std::string eval_report;
  std::string checkpoint;
  std::string config;
  std::string plot;
};

struct ManifestFile {
  std::string path;  // relative to the output root
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<RunRecord> runs;
  std::vector<ManifestFile> files;
};

struct RunHooks {
  std::ostream* log = nullptr;
  /// Optional per-run observer, e.g. for parameter hashing.
  std::function<adapt::PhaseObserver*(const std::string& dataset, const std::string& column, std::uint64_t seed)>
      observer;
};

/// Every (dataset, column, seed): fresh model, train_run, evaluate, files
/// under <out>/<dataset>/<column dir>/seed_<s>/. Then results.csv,
/// table.md, and manifest.json at the output root.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks = {});

/// Training/evaluation data of one dataset entry.
std::pair<synth::EpisodeSet, synth::EpisodeSet> load_or_generate(const DatasetEntry& d, const ExperimentConfig& cfg);

}  // namespace driftbench::bench
