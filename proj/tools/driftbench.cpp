// SPDX-License-Identifier: Apache-2.0
// driftbench command line: data generation, training, evaluation, theory
// probes, tables, plots, and the full reproduction protocol.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <set>

#include "driftbench/adapt/loop.hpp"
#include "driftbench/bench/experiment.hpp"
#include "driftbench/bench/manifest.hpp"
#include "driftbench/bench/plots.hpp"
#include "driftbench/bench/table.hpp"
#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"
#include "driftbench/model/checkpoint.hpp"
#include "driftbench/synthgen/episode_io.hpp"
#include "driftbench/theory/report_io.hpp"

using namespace driftbench;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kIncomplete = 3;
constexpr int kAcceptanceFailure = 4;

nlohmann::json read_json(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("file not found: " + path);
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Accepts a bare adapt object or any document with an "adapt" member.
adapt::AdaptConfig load_adapt(const std::string& path) {
  if (path.empty()) return {};
  const nlohmann::json j = read_json(path);
  return adapt::AdaptConfig::from_json(j.contains("adapt") ? j.at("adapt") : j);
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(key) + " has the wrong type");
  }
}

// ---- gen-data -------------------------------------------------------------

struct GenArgs {
  std::string variant = "s1";
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  std::size_t skip = 0;
  std::string out;
};

int gen_data(const GenArgs& a) {
  synth::DatasetSpec spec;
  spec.variant = synth::parse_variant(a.variant);
  spec.seed = a.seed;
  if (a.count == 0) throw ConfigError("--count must be at least 1");
  synth::write_episode_file(synth::episode_stream(spec, a.count, a.skip), a.out);
  std::cerr << "wrote " << a.count << " episodes to " << a.out << "\n";
  return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string variant = "dynamic";
  std::string backbone = "kunet";
  std::string dataset;
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::size_t> inner_steps;
  std::optional<std::size_t> eval_inner_steps;
};

int train(const TrainArgs& a) {
  const std::string column = a.variant.find('/') == std::string::npos ? a.variant + "/" + a.backbone : a.variant;
  bench::VariantSpec v = bench::VariantSpec::parse(column);
  if (a.inner_steps) v.inner_steps = a.inner_steps;
  if (a.eval_inner_steps) v.eval_inner_steps = a.eval_inner_steps;
  const model::ModelConfig mc = v.model_config();
  const adapt::AdaptConfig cfg = v.adapt_config(load_adapt(a.config));
  cfg.validate_for(mc.arch.backbone == model::Backbone::kunet ? mc.arch.L : 0);
  const synth::EpisodeSet data = synth::read_episode_file(a.dataset);

  Rng init_rng(derive_seed(a.seed, 0));
  model::Model m(mc, init_rng);
  const adapt::RunLog log = adapt::train_run(data, m, cfg, derive_seed(a.seed, 1));

  const fs::path out(a.out);
  write_text_file((out / "run_log.json").string(), log.to_json());
  model::save_checkpoint(m, (out / "checkpoint.json").string());
  JsonWriter w;
  w.begin_object();
  w.key("column").value(v.column());
  w.key("seed").value(a.seed);
  w.key("adapt");
  cfg.write(w);
  w.end_object();
  write_text_file((out / "config.json").string(), w.str() + "\n");
  std::cerr << v.column() << " seed " << a.seed << ": final epoch query loss "
            << format_double(log.epoch_query_loss.back()) << "\n";
  return kOk;
}

// ---- eval / plot ----------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string dataset;
  std::size_t episodes = 0;
  std::string out;
  std::string config;
  std::uint64_t eval_seed = 1000;
  std::string label;
  std::size_t episode = 0;
};

// The run config next to a checkpoint supplies the adapt settings and label.
std::pair<adapt::AdaptConfig, std::string> eval_setup(const EvalArgs& a, const model::Model& m) {
  std::string path = a.config;
  const fs::path sibling = fs::path(a.model).parent_path() / "config.json";
  if (path.empty() && fs::exists(sibling)) path = sibling.string();
  std::string label = a.label;
  if (label.empty() && !path.empty()) label = get_or<std::string>(read_json(path), "column", "");
  if (label.empty()) label = std::string(model::to_string(m.config().variant));
  return {load_adapt(path), label};
}

int eval(const EvalArgs& a) {
  const model::Model m = model::load_checkpoint(a.model);
  const auto [cfg, label] = eval_setup(a, m);
  const synth::EpisodeSet data = synth::read_episode_file(a.dataset);
  if (a.episodes > data.episodes.size()) throw ConfigError("--episodes exceeds the episodes in " + a.dataset);
  const adapt::EvalReport rep = adapt::evaluate(data, m, cfg, a.eval_seed, a.episodes, label);
  write_text_file((fs::path(a.out) / "eval_report.json").string(), rep.to_json());
  std::cout << label << " on " << rep.dataset << ": mean query MSE " << format_double(rep.mean_mse) << " (std "
            << format_double(rep.std_mse) << ", " << rep.episodes << " episodes)\n";
  return kOk;
}

int plot(const EvalArgs& a) {
  const model::Model m = model::load_checkpoint(a.model);
  const auto [cfg, label] = eval_setup(a, m);
  const synth::EpisodeSet data = synth::read_episode_file(a.dataset);
  if (a.episode >= data.episodes.size()) throw ConfigError("--episode is out of range");
  const synth::Episode& ep = data.episodes[a.episode];
  const auto pred = adapt::adapt_and_predict(ep, m, cfg, derive_seed(a.eval_seed, a.episode));
  bench::emit_plots(ep, pred, a.out, label + ", episode " + std::to_string(a.episode));
  return kOk;
}

// ---- theory ---------------------------------------------------------------

struct TheoryArgs {
  std::string probe;
  std::string config;
  std::string out;
  std::string calibration;
  bool calibrate = false;
};

int theory_pl(const nlohmann::json& j, const fs::path& out) {
  theory::PLSuiteConfig c;
  c.seed = get_or(j, "seed", c.seed);
  c.instances = get_or(j, "instances", c.instances);
  c.dim_lo = get_or(j, "dim_lo", c.dim_lo);
  c.dim_hi = get_or(j, "dim_hi", c.dim_hi);
  c.delta0 = get_or(j, "delta0", c.delta0);
  c.rho = get_or(j, "rho", c.rho);
  c.alpha_factor = get_or(j, "alpha_factor", c.alpha_factor);
  c.steps = get_or(j, "steps", c.steps);
  const auto reports = theory::pl_suite(c);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    violations += reports[k].violations;
    write_text_file((out / ("pl_" + std::to_string(k) + ".json")).string(), theory::to_json(reports[k]));
    write_text_file((out / ("pl_" + std::to_string(k) + ".csv")).string(), theory::to_csv(reports[k]));
  }

  // μ = L = 1 without drift: the gap contracts by (1 − α)² per step.
  theory::DriftingQuadratic q;
  q.H = Eigen::MatrixXd::Identity(1, 1);
  q.center = Eigen::VectorXd::Zero(1);
  q.drift_dir = Eigen::VectorXd::Ones(1);
  const auto zero = theory::pl_contraction_probe(q, [](std::size_t) { return 0.1; }, c.steps,
                                                 Eigen::VectorXd::Ones(1));
  write_text_file((out / "pl_zero_drift.json").string(), theory::to_json(zero));
  write_text_file((out / "pl_zero_drift.csv").string(), theory::to_csv(zero));
  std::cout << "pl: " << reports.size() << " instances, " << violations << " violations; zero-drift gap ratio "
            << format_double(zero.gaps.back() / zero.gaps.front()) << "\n";
  return kOk;
}

int theory_regret(const nlohmann::json& j, const TheoryArgs& a, const fs::path& out) {
  const auto seed = get_or<std::uint64_t>(j, "seed", 1);
  const auto instances = get_or<std::size_t>(j, "instances", 10);
  const auto horizons = get_or<std::vector<std::size_t>>(j, "horizons", {256, 1024, 4096});
  if (horizons.empty()) throw ConfigError("horizons must not be empty");

  theory::RegretCalibration cal;
  if (a.calibrate) {
    cal = theory::calibrate_regret(get_or<std::uint64_t>(j, "calibration_seed", 1009),
                                   get_or<std::size_t>(j, "calibration_instances", 10), horizons,
                                   get_or(j, "headroom", 4.0));
    write_text_file((out / "regret_calibration.json").string(), theory::to_json(cal));
  } else if (!a.calibration.empty()) {
    cal = theory::regret_calibration_from_json(read_text_file(a.calibration));
  } else {
    throw ConfigError("regret probe needs --calibration FILE or --calibrate");
  }

  JsonWriter w;
  w.begin_object();
  w.key("C").value(cal.constants.C);
  w.key("C0").value(cal.constants.C0);
  w.key("horizons").begin_array();
  for (std::size_t T : horizons) {
    const auto batch = theory::regret_batch(seed, instances, T);
    double avg = 0.0;
    std::size_t passed = 0;
    for (const auto& r : batch) {
      avg += r.R_T / static_cast<double>(T);
      const double alpha = r.alpha;
      passed += theory::regret_bound_check(r, [alpha](std::size_t) { return alpha; }, r.G, cal.constants);
    }
    avg /= static_cast<double>(batch.size());
    write_text_file((out / ("regret_T" + std::to_string(T) + ".csv")).string(), theory::to_csv(batch.front()));
    w.begin_object();
    w.key("T").value(static_cast<std::uint64_t>(T));
    w.key("mean_avg_regret").value(avg);
    w.key("bound_checks_passed").value(static_cast<std::uint64_t>(passed));
    w.key("instances").value(static_cast<std::uint64_t>(batch.size()));
    w.end_object();
    std::cout << "regret T=" << T << ": mean R_T/T " << format_double(avg) << ", bound holds on " << passed << "/"
              << batch.size() << "\n";
  }
  w.end_array();
  w.end_object();
  write_text_file((out / "regret_summary.json").string(), w.str() + "\n");
  return kOk;
}

int theory_expressivity(const nlohmann::json& j, const fs::path& out) {
  const auto K = get_or<std::size_t>(j, "tasks", 8);
  const auto P = get_or<std::size_t>(j, "budget", 8);
  const auto n = get_or<std::size_t>(j, "samples", 64);
  Rng rng(get_or<std::uint64_t>(j, "seed", 1));
  const auto conflicting = theory::expressivity_probe(theory::conflicting_tasks(K, P, n, rng), P);
  const auto identical = theory::expressivity_probe(theory::identical_tasks(K, P, n, rng), P);
  write_text_file((out / "expressivity_conflicting.json").string(), theory::to_json(conflicting));
  write_text_file((out / "expressivity_conflicting.csv").string(), theory::to_csv(conflicting));
  write_text_file((out / "expressivity_identical.json").string(), theory::to_json(identical));
  write_text_file((out / "expressivity_identical.csv").string(), theory::to_csv(identical));
  std::cout << "expressivity K=" << K << " P=" << P << ": conflicting static " << format_double(conflicting.static_worst_error)
            << " dynamic " << format_double(conflicting.dynamic_worst_error) << "; identical static "
            << format_double(identical.static_worst_error) << " dynamic "
            << format_double(identical.dynamic_worst_error) << "\n";
  return kOk;
}

int run_theory(const TheoryArgs& a) {
  const nlohmann::json j = a.config.empty() ? nlohmann::json::object() : read_json(a.config);
  const fs::path out(a.out);
  if (a.probe == "pl") return theory_pl(j, out);
  if (a.probe == "regret") return theory_regret(j, a, out);
  if (a.probe == "expressivity") return theory_expressivity(j, out);
  throw ConfigError("unknown probe '" + a.probe + "' (expected pl, regret or expressivity)");
}

// ---- table ----------------------------------------------------------------

struct TableArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int table(const TableArgs& a) {
  std::vector<std::string> files;
  for (const std::string& in : a.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().filename() == "eval_report.json") files.push_back(e.path().string());
      }
    } else {
      files.push_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<adapt::EvalReport> reports;
  for (const std::string& f : files) reports.push_back(adapt::EvalReport::from_json(read_text_file(f)));
  if (reports.empty()) throw IncompleteError("no evaluation reports found");
  const bench::ResultsTable t = bench::build_table(reports);
  bench::export_csv(t, (fs::path(a.out) / "results.csv").string());
  const std::string md = bench::table_to_markdown(t);
  write_text_file((fs::path(a.out) / "table.md").string(), md);
  std::cout << md;
  return kOk;
}

// ---- repro ----------------------------------------------------------------

struct ReproArgs {
  std::string config;
  std::string out;
  std::vector<std::string> datasets;
  std::vector<std::string> variants;
  bool check = false;
  bool no_run = false;
};

std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Ordering and magnitude checks. Only the s1 row decides the outcome; other
// rows are reported as notes.
bool check_results(const bench::ResultsTable& t) {
  bool ok = true;
  auto has = [&](const std::string& r, const std::string& c) { return t.cells.count({r, c}) > 0; };
  for (const std::string& r : t.rows) {
    const bool gating = r == "s1";
    auto line = [&](bool pass, const std::string& what) {
      std::cout << (pass ? "PASS " : gating ? "FAIL " : "NOTE ") << r << ": " << what << "\n";
      if (gating) ok = ok && pass;
    };
    auto v = [&](const std::string& c) { return t.at(r, c).mean_mse; };
    if (has(r, "dynamic/kunet") && has(r, "lora/kunet") && has(r, "static/kunet")) {
      line(v("dynamic/kunet") < v("lora/kunet") && v("lora/kunet") < v("static/kunet"),
           "dynamic < lora < static (" + g4(v("dynamic/kunet")) + ", " + g4(v("lora/kunet")) + ", " +
               g4(v("static/kunet")) + ")");
    }
    if (has(r, "dynamic*/kunet") && has(r, "dynamic/kunet")) {
      line(v("dynamic*/kunet") < v("dynamic/kunet"),
           "dynamic* < dynamic (" + g4(v("dynamic*/kunet")) + ", " + g4(v("dynamic/kunet")) + ")");
    }
    if (gating && has(r, "dynamic*/kunet")) line(v("dynamic*/kunet") <= 0.3, "dynamic* <= 0.3");
    if (has(r, "dynamic*/kunet") && has(r, "static/kunet")) {
      line(v("static/kunet") >= 2.0 * v("dynamic*/kunet"),
           "static >= 2 x dynamic* (ratio " + g4(v("static/kunet") / v("dynamic*/kunet")) + ")");
    }
  }
  return ok;
}

int repro(const ReproArgs& a) {
  bench::ExperimentConfig cfg = a.config.empty() ? bench::table1_config() : bench::ExperimentConfig::load(a.config);
  if (const char* env = std::getenv("DRIFTBENCH_OUT"); env && *env) cfg.out_dir = env;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.datasets.empty()) {
    std::vector<bench::DatasetEntry> keep;
    for (const std::string& name : a.datasets) {
      const synth::Variant v = synth::parse_variant(name);
      for (const auto& d : cfg.datasets) {
        if (d.variant == v) keep.push_back(d);
      }
    }
    cfg.datasets = keep;
  }
  if (!a.variants.empty()) {
    cfg.variants.clear();
    for (const std::string& c : a.variants) cfg.variants.push_back(bench::VariantSpec::parse(c));
  }
  cfg.validate();

  if (!a.no_run) {
    bench::RunHooks hooks;
    hooks.log = &std::cerr;
    bench::run_experiment(cfg, hooks);
  }
  if (!a.check) return kOk;

  const fs::path manifest = fs::path(cfg.out_dir) / "manifest.json";
  if (!fs::exists(manifest)) throw IncompleteError("no manifest at " + manifest.string());
  const auto problems = bench::verify_manifest(manifest.string());
  for (const auto& p : problems) std::cerr << "manifest: " << p << "\n";
  if (!problems.empty()) return kIncomplete;
  const bench::ResultsTable t = bench::parse_csv(read_text_file((fs::path(cfg.out_dir) / "results.csv").string()));
  for (const auto& d : cfg.datasets) {
    for (const auto& v : cfg.variants) {
      t.at(std::string(synth::to_string(d.variant)), v.column());  // throws IncompleteError
    }
  }
  return check_results(t) ? kOk : kAcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftbench: test-time trunk adaptation benchmark"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate an episode file");
  g->add_option("--variant", gen.variant, "s1, s2 or s3")->capture_default_str();
  g->add_option("--count", gen.count, "Number of episodes")->capture_default_str();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--skip", gen.skip, "Skip this many episodes of the stream first")->capture_default_str();
  g->add_option("--out", gen.out, "Output file")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model");
  t->add_option("--variant", tr.variant, "dynamic, dynamic*, static, init-all, lora, or a group/backbone column")
      ->capture_default_str();
  t->add_option("--backbone", tr.backbone, "kunet or linear")->capture_default_str();
  t->add_option("--dataset", tr.dataset, "Training episode file")->required();
  t->add_option("--config", tr.config, "Adapt config JSON");
  t->add_option("--seed", tr.seed, "Run seed")->capture_default_str();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--inner-steps", tr.inner_steps, "Phase-1 steps during training");
  t->add_option("--eval-inner-steps", tr.eval_inner_steps, "Phase-1 steps at evaluation");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--model", ev.model, "Checkpoint file")->required();
  e->add_option("--dataset", ev.dataset, "Evaluation episode file")->required();
  e->add_option("--episodes", ev.episodes, "Episodes to evaluate (0 = all)")->capture_default_str();
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_option("--config", ev.config, "Adapt config JSON (default: config.json beside the checkpoint)");
  e->add_option("--eval-seed", ev.eval_seed, "Evaluation seed")->capture_default_str();
  e->add_option("--label", ev.label, "Variant label in the report");

  EvalArgs pl;
  auto* p = app.add_subcommand("plot", "Plot one adapted episode as SVG");
  p->add_option("--model", pl.model, "Checkpoint file")->required();
  p->add_option("--dataset", pl.dataset, "Episode file")->required();
  p->add_option("--episode", pl.episode, "Episode index")->capture_default_str();
  p->add_option("--out", pl.out, "Output SVG file")->required();
  p->add_option("--config", pl.config, "Adapt config JSON (default: config.json beside the checkpoint)");
  p->add_option("--eval-seed", pl.eval_seed, "Evaluation seed")->capture_default_str();
  p->add_option("--label", pl.label, "Title label");

  TheoryArgs th;
  auto* h = app.add_subcommand("theory", "Run a theory probe");
  h->add_option("--probe", th.probe, "pl, regret or expressivity")->required();
  h->add_option("--config", th.config, "Probe config JSON");
  h->add_option("--out", th.out, "Output directory")->required();
  h->add_option("--calibration", th.calibration, "Regret calibration JSON");
  h->add_flag("--calibrate", th.calibrate, "Fit and write a regret calibration");

  TableArgs ta;
  auto* b = app.add_subcommand("table", "Build the results table from evaluation reports");
  b->add_option("inputs", ta.inputs, "Report files or directories to scan")->required();
  b->add_option("--out", ta.out, "Output directory")->required();

  ReproArgs re;
  auto* r = app.add_subcommand("repro", "Run the full reproduction protocol");
  r->add_option("--config", re.config, "Experiment config JSON (default: built-in protocol)");
  r->add_option("--out", re.out, "Output root (overrides DRIFTBENCH_OUT)");
  r->add_option("--datasets", re.datasets, "Restrict to these datasets")->delimiter(',');
  r->add_option("--variants", re.variants, "Replace the column list")->delimiter(',');
  r->add_flag("--check", re.check, "Verify outputs and check the expected ordering");
  r->add_flag("--no-run", re.no_run, "Only check an existing output tree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*g) return gen_data(gen);
    if (*t) return train(tr);
    if (*e) return eval(ev);
    if (*p) return plot(pl);
    if (*h) return run_theory(th);
    if (*b) return table(ta);
    if (*r) return repro(re);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kConfigError;
  } catch (const DimensionError& err) {
    std::cerr << "dimension error: " << err.what() << "\n";
    return kConfigError;
  } catch (const IncompleteError& err) {
    std::cerr << "incomplete: " << err.what() << "\n";
    return kIncomplete;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return kConfigError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kOk;
}
