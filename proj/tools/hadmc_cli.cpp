// hadmc: command-line front-end for scenario generation, training,
// evaluation, the latent-dimension sweep and report bundling.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hadmc/baselines.hpp"
#include "hadmc/errors.hpp"
#include "hadmc/harness.hpp"
#include "hadmc/rng.hpp"
#include "hadmc/serialize.hpp"
#include "hadmc/training.hpp"

namespace fs = std::filesystem;
using namespace hadmc;

namespace {

struct Options {
  std::string config;
  long seed = -1;
  std::string out;
  std::vector<std::string> models;
  std::string scenario;
  bool desk_scale = false;
  bool resume = false;
  std::string set = "test";
};

// Exit status 2: the run never started because its inputs are wrong.
struct ConfigError : std::runtime_error {
  ConfigError(std::string f, const std::string& msg) : std::runtime_error(msg), field(std::move(f)) {}
  std::string field;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int fail(int code, const std::string& kind, const std::string& field, const std::string& message) {
  std::fprintf(stderr, "hadmc: error code=%d kind=%s field=\"%s\" message=\"%s\"\n", code, kind.c_str(),
               escape(field).c_str(), escape(message).c_str());
  return code;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Loaded {
  ExperimentConfig cfg;
  std::string raw;
  fs::path out;
};

Loaded load(const Options& o, bool need_config) {
  Loaded l;
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config.empty()) {
    try {
      l.raw = io::read_text(o.config);
      doc = nlohmann::json::parse(l.raw);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    } catch (const std::exception& e) {
      throw ConfigError("--config", e.what());
    }
  } else if (need_config) {
    throw ConfigError("--config", "a config file is required");
  }
  try {
    l.cfg = experiment_config_from_json(doc, o.desk_scale);
    if (!o.scenario.empty()) apply_scenario_tag(l.cfg.scenario, o.scenario);
  } catch (const ParseError& e) {
    throw ConfigError(e.field(), e.what());
  }
  const std::string out = !o.out.empty() ? o.out : l.cfg.output_dir;
  if (out.empty()) throw ConfigError("--out", "no output directory (pass --out or set output_dir)");
  l.out = out;
  fs::create_directories(l.out);
  if (!l.raw.empty()) io::write_text_atomic(l.out / "config.json", l.raw);
  return l;
}

void write_resolved(const Loaded& l) {
  io::write_json_atomic(l.out / "resolved_config.json", experiment_config_to_json(l.cfg));
}

void set_train_seed(ExperimentConfig& c, long seed) {
  if (seed >= 0) c.train.seed = static_cast<std::uint64_t>(seed);
}

void set_scenario_seed(ExperimentConfig& c, long seed) {
  if (seed >= 0) c.scenario.seed = seed;
}

DeploymentSet parse_set(const std::string& s) {
  if (s == "train") return DeploymentSet::train;
  if (s == "eval") return DeploymentSet::eval;
  if (s == "test") return DeploymentSet::test;
  throw ConfigError("--set", "expected train, eval or test");
}


std::string deployment_name(const std::string& tag, int i) {
  char name_buf[64];
  std::snprintf(name_buf, sizeof name_buf, "%s_%03d", tag.c_str(), i);
  return name_buf;
}

int cmd_gen(const Options& o) {
  auto l = load(o, true);
  set_scenario_seed(l.cfg, o.seed);
  write_resolved(l);
  const auto specs = make_deployments(l.cfg.scenario, parse_set(o.set));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    save_deployment(specs[i], l.out / (deployment_name(l.cfg.scenario.tag(), static_cast<int>(i)) + ".json"));
  }
  std::printf("wrote %zu deployments to %s\n", specs.size(), l.out.string().c_str());
  return 0;
}

int cmd_pretrain(const Options& o) {
  auto l = load(o, true);
  set_train_seed(l.cfg, o.seed);
  write_resolved(l);
  const auto& sc = l.cfg.scenario;
  if (l.cfg.model.kind != ModelKind::hadmc && l.cfg.model.kind != ModelKind::hadmc_minus_ml) {
    throw ConfigError("model.kind", "pretrain needs a model with the AAE (hadmc or hadmc_minus_ml)");
  }
  Stopwatch watch;
  const EpisodeOptions options{l.cfg.train.reward, l.cfg.train.max_stages};
  const auto train_specs = make_deployments(sc, DeploymentSet::train);
  const auto buffer = build_pretrain_buffer(train_specs, static_cast<std::size_t>(l.cfg.train.pretrain_buffer),
                                            derive_seed(l.cfg.train.seed, 20), options);
  const auto held = build_pretrain_buffer(make_deployments(sc, DeploymentSet::eval), 2000, derive_seed(l.cfg.train.seed, 25),
                                          options);
  const int sd = static_cast<int>(state_dim(static_cast<std::size_t>(sc.n), static_cast<std::size_t>(sc.m)));
  ActionCodec<float> codec(codec_config_for(l.cfg.model, sc.m, sd, l.cfg.train.policy.lr), derive_seed(l.cfg.train.seed, 22));
  std::mt19937_64 rng(derive_seed(l.cfg.train.seed, 21));
  const auto log = pretrain_decoder(codec, buffer, l.cfg.train.n_pi, l.cfg.train.b_pi, rng, l.cfg.train.pretrain_log_every);
  std::vector<const PretrainTuple*> held_tuples;
  for (std::size_t i = 0; i < held.size(); ++i) held_tuples.push_back(&held.at(i));
  io::write_json_atomic(l.out / "codec.json", codec.to_json());
  io::write_text_atomic(l.out / "pretrain.csv", pretrain_rows_to_csv(log));
  io::write_json_atomic(l.out / "heldout.json", {{"a_con_reconstruction_mse", reconstruction_mse(codec, held_tuples)},
                                                 {"heldout_tuples", held_tuples.size()}});
  io::write_json_atomic(l.out / "timing.json", {{"pretrain_seconds", watch.seconds()}});
  std::printf("pretrained decoder: %zu log rows\n", log.size());
  return 0;
}

void train_one(ExperimentConfig cfg, const fs::path& dir, bool resume) {
  fs::create_directories(dir);
  Stopwatch watch;
  const auto& kind = cfg.model.kind;
  if (kind == ModelKind::greedy) {
    io::write_json_atomic(dir / "model.json", {{"schema_version", 1},
                                               {"model", model_config_to_json(cfg.model)},
                                               {"scenario", scenario_config_to_json(cfg.scenario)}});
    return;
  }
  if (kind == ModelKind::dqn_disc) {
    DqnTrainer t(cfg.scenario, cfg.model, cfg.train);
    t.run_all();
    t.write_checkpoints(dir);
    io::write_text_atomic(dir / "report.csv", eval_rows_to_csv(t.report().rows));
    io::write_text_atomic(dir / "losses.csv", loss_rows_to_csv(t.report().losses));
    io::write_json_atomic(dir / "timing.json", {{"train_seconds", watch.seconds()}});
    return;
  }
  Trainer t(cfg.scenario, cfg.model, cfg.train);
  const fs::path snap = dir / "snapshot.bin";
  if (resume) {
    if (!fs::exists(snap)) throw ConfigError("--resume", "no snapshot at " + snap.string());
    t.restore(io::read_text(snap));
  }
  try {
    t.pretrain();
    t.warmup();
    while (!t.finished()) {
      const long next = (t.step() / cfg.train.eval_every + 1) * cfg.train.eval_every;
      t.run_until(next);
      io::write_text_atomic(snap, t.snapshot());
    }
  } catch (...) {
    std::fprintf(stderr, "hadmc: training aborted at step %ld; last snapshot kept at %s\n", t.step(), snap.string().c_str());
    throw;
  }
  t.write_checkpoints(dir);
  io::write_text_atomic(dir / "report.csv", eval_rows_to_csv(t.report().rows));
  io::write_text_atomic(dir / "losses.csv", loss_rows_to_csv(t.report().losses));
  io::write_text_atomic(dir / "pretrain.csv", pretrain_rows_to_csv(t.report().pretrain));
  io::write_json_atomic(dir / "timing.json", {{"train_seconds", watch.seconds()}});
}

int cmd_train(const Options& o) {
  auto l = load(o, true);
  set_train_seed(l.cfg, o.seed);
  write_resolved(l);
  if (o.models.empty()) {
    train_one(l.cfg, l.out, o.resume);
    return 0;
  }
  for (const auto& m : o.models) {
    ExperimentConfig cfg = l.cfg;
    try {
      cfg.model.kind = model_kind_from_string(m);
    } catch (const ParseError& e) {
      throw ConfigError("--models", e.what());
    }
    train_one(cfg, l.out / m, o.resume);
  }
  return 0;
}

std::vector<NamedController> resolve_models(const std::vector<std::string>& models) {
  if (models.empty()) throw ConfigError("--models", "list at least one model (a checkpoint directory or \"greedy\")");
  std::vector<NamedController> out;
  for (const auto& m : models) {
    if (m == "greedy") {
      out.push_back({"greedy", std::make_shared<GreedyController>()});
      continue;
    }
    const fs::path dir(m);
    if (!fs::is_directory(dir)) throw ConfigError("--models", "no checkpoint directory for model \"" + m + "\"");
    std::string name = dir.filename().string();
    if (name.empty()) name = dir.parent_path().filename().string();
    std::shared_ptr<const Controller> c;
    try {
      c = load_controller(dir);
    } catch (const std::exception& e) {
      throw ConfigError("--models", "model \"" + m + "\": " + e.what());
    }
    out.push_back({name, std::move(c)});
  }
  return out;
}

int cmd_eval(const Options& o) {
  auto l = load(o, true);
  set_scenario_seed(l.cfg, o.seed);
  write_resolved(l);
  const auto models = resolve_models(o.models);
  Stopwatch watch;
  const auto specs = make_deployments(l.cfg.scenario, DeploymentSet::test);
  const EpisodeOptions options{l.cfg.train.reward, l.cfg.train.max_stages};
  const auto rows = run_comparison(models, specs, l.cfg.scenario.tag(), options);
  io::write_text_atomic(l.out / "comparison.csv", comparison_to_csv(rows));
  io::write_text_atomic(l.out / "comparison_summary.csv", summary_to_csv(summarize(rows)));
  io::write_json_atomic(l.out / "timing.json", {{"eval_seconds", watch.seconds()}});
  std::printf("evaluated %zu models on %zu deployments\n", models.size(), specs.size());
  return 0;
}

int cmd_greedy(const Options& o) {
  auto l = load(o, true);
  set_scenario_seed(l.cfg, o.seed);
  write_resolved(l);
  const auto specs = make_deployments(l.cfg.scenario, DeploymentSet::test);
  const EpisodeOptions options{l.cfg.train.reward, l.cfg.train.max_stages};
  const auto tag = l.cfg.scenario.tag();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto r = greedy_schedule(specs[i], options);
    io::write_text_atomic(l.out / "traces" / (deployment_name(tag, static_cast<int>(i)) + ".csv"), trace_to_csv(r.trace));
  }
  const auto rows = run_comparison({{"greedy", std::make_shared<GreedyController>()}}, specs, tag, options);
  io::write_text_atomic(l.out / "comparison.csv", comparison_to_csv(rows));
  io::write_text_atomic(l.out / "comparison_summary.csv", summary_to_csv(summarize(rows)));
  return 0;
}

int cmd_sweep(const Options& o) {
  auto l = load(o, true);
  set_train_seed(l.cfg, o.seed);
  write_resolved(l);
  Stopwatch watch;
  const auto points = latent_dim_sweep(l.cfg.scenario, l.cfg.model, l.cfg.train, l.cfg.sweep, l.cfg.train.seed);
  io::write_text_atomic(l.out / "sweep.csv", sweep_to_csv(points));
  io::write_json_atomic(l.out / "timing.json", {{"sweep_seconds", watch.seconds()}});
  return 0;
}

int cmd_report(const Options& o) {
  auto l = load(o, false);
  const auto files = make_report(l.out);
  for (const auto& f : files) std::printf("%s\n", f.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hadmc: drone and mobile-charger scheduling experiments"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)");
    sub->add_option("--seed", o.seed, "Seed override")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--models", o.models, "Model kinds (train) or checkpoint dirs / greedy (eval)");
    sub->add_option("--scenario", o.scenario, "Scenario tag override, e.g. SA1");
    sub->add_flag("--desk-scale", o.desk_scale, "Use desk-scale training step counts");
  };
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> subs;
  auto* gen = app.add_subcommand("gen", "Generate deployments");
  gen->add_option("--set", o.set, "Which deployment set: train, eval or test");
  subs.emplace_back(gen, cmd_gen);
  subs.emplace_back(app.add_subcommand("pretrain", "Pre-train the action decoder"), cmd_pretrain);
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_flag("--resume", o.resume, "Continue from snapshot.bin in the output directory");
  subs.emplace_back(train, cmd_train);
  subs.emplace_back(app.add_subcommand("eval", "Compare models on held-out deployments"), cmd_eval);
  subs.emplace_back(app.add_subcommand("greedy", "Run the greedy schedule"), cmd_greedy);
  subs.emplace_back(app.add_subcommand("sweep", "Latent-dimension sweep"), cmd_sweep);
  subs.emplace_back(app.add_subcommand("report", "Build plot-ready bundles from a results directory"), cmd_report);
  for (auto& [sub, fn] : subs) common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    return fail(2, "usage", "argv", e.what());
  }

  try {
    for (auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(o);
    }
    return fail(2, "usage", "argv", "no subcommand");
  } catch (const ConfigError& e) {
    return fail(2, "config", e.field, e.what());
  } catch (const ParseError& e) {
    return fail(2, "config", e.field(), e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime", "", e.what());
  }
}
