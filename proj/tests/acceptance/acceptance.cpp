// Acceptance suite: one PASS/FAIL line per criterion, details in
// <work>/acceptance.json. Exit status is 1 if any criterion fails.
//
//   hadmc_acceptance --work DIR [--only 1,2,7]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hadmc/action_codec.hpp"
#include "hadmc/baselines.hpp"
#include "hadmc/episode.hpp"
#include "hadmc/harness.hpp"
#include "hadmc/nn.hpp"
#include "hadmc/reward.hpp"
#include "hadmc/rng.hpp"
#include "hadmc/serialize.hpp"
#include "hadmc/training.hpp"

using namespace hadmc;
using nn::Matrix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  nlohmann::json detail;
};

DeploymentSpec make_spec(std::vector<Point2D> pois, std::vector<Point2D> chargers, double tau_min = 4.0,
                         double tau_max = 6.0) {
  DeploymentSpec s;
  for (auto p : pois) s.pois.push_back({p, tau_min, tau_max});
  bool first = true;
  for (auto c : chargers) {
    s.charge_points.push_back({c, first});
    first = false;
  }
  return s;
}

JointAction observe(double tau, int dest, int m) {
  JointAction a;
  a.a = 1;
  a.tau = tau;
  a.a_tilde = dest;
  a.a_dis = m + dest;
  return a;
}

JointAction charge(int c, double tau_tilde) {
  JointAction a;
  a.a = 0;
  a.a_tilde = c;
  a.a_dis = c;
  a.tau_tilde = tau_tilde;
  return a;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

// ---------------------------------------------------------------- 1

Outcome reward_oracles() {
  double worst = 0.0;
  bool branches = true;
  const auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  {
    auto w = make_spec({{100, 0}, {100, 600}}, {{0, 0}, {200, 0}});
    const auto s = reset(w);
    const auto act = observe(6.0, 1, 2);
    const auto t = apply_action(s, w, act);
    track(dispatch({w, s, t.state, act, t.outcome.kase}, {}), 0.09375);
  }
  {
    auto w = make_spec({{100, 0}, {1000, 1000}}, {{0, 0}});
    auto s = apply_observe(reset(w), w, 6.0, 0).state;
    const auto act = observe(6.0, 0, 1);
    const auto t = apply_action(s, w, act);
    branches &= t.state.terminal == Terminal::failed;
    track(dispatch({w, s, t.state, act, t.outcome.kase}, {}), -20.0);

    auto home = make_spec({{100, 0}}, {{0, 0}});
    auto h = apply_observe(reset(home), home, 6.0, 0).state;
    h.drone_clock = 100.0;
    h.ledger.wait = 90.0;
    const auto back = observe(0.0, 0, 1);
    const auto t3 = apply_action(h, home, back);
    branches &= t3.state.terminal == Terminal::completed;
    track(dispatch({home, h, t3.state, back, t3.outcome.kase}, {}), 40.0 / 104.0);
  }
  {
    auto w = make_spec({{100, 0}, {800, 800}}, {{0, 0}, {200, 0}});
    auto s = apply_observe(reset(w), w, 6.0, 1).state;
    s.charger.clock = 0.0;
    s.drone.energy = 50.0;
    const auto act = charge(1, 1.0);
    const auto t = apply_action(s, w, act);
    const double dt2 = 4.0 + travel_time({200, 0}, {800, 800}, 25.0);
    const double want = utility_sum(t.state, w) / makespan(t.state) * (60.0 / 46.0) / dt2;
    track(reward_charge({w, s, t.state, act, t.outcome.kase}, {}), want);
    for (double e = 4.5; e <= 60.0; e += 0.5) {
      s.drone.energy = e;
      const auto ti = apply_action(s, w, act);
      const double r = reward_charge({w, s, ti.state, act, ti.outcome.kase}, {});
      branches &= (4.0 >= 0.2 * e) ? r == 0.0 : r > 0.0;
    }
  }
  return {worst <= 1e-9 && branches, {{"max_abs_error", worst}, {"branches_ok", branches}}};
}

// ---------------------------------------------------------------- 2

int brute_lookup(const Matrix<float>& table, const std::vector<float>& z, const std::vector<int>& feasible) {
  int best = -1;
  double best_d = 0.0;
  for (int row : feasible) {
    double d = 0.0;
    for (int k = 0; k < table.cols(); ++k) {
      const double diff = z[static_cast<std::size_t>(k)] - std::tanh(static_cast<double>(table(row, k)));
      d += diff * diff;
    }
    if (best < 0 || d < best_d || (d == best_d && row < best)) {
      best = row;
      best_d = d;
    }
  }
  return best;
}

Outcome codec_round_trips() {
  long combine_bad = 0;
  for (int m : {4, 8, 12, 16}) {
    for (int d = 0; d < 2 * m; ++d) {
      const auto [a, at] = split_discrete(d, m);
      if (combine_discrete(a, at, m) != d || at < 0 || at >= m) ++combine_bad;
    }
  }
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  long lookup_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    CodecConfig cfg;
    cfg.m = 1 + trial % 16;
    cfg.kappa1 = 1 + trial % 9;
    cfg.kappa2 = 3;
    cfg.state_dim = 3;
    cfg.use_aae = false;
    ActionCodec<float> codec(cfg, static_cast<std::uint64_t>(trial));
    for (int r = 0; r < codec.table().rows(); ++r)
      for (int k = 0; k < codec.table().cols(); ++k) codec.table()(r, k) = static_cast<float>(u(rng));
    std::vector<float> z(static_cast<std::size_t>(cfg.kappa1));
    for (auto& v : z) v = static_cast<float>(u(rng));
    std::vector<int> feasible;
    for (int row = 0; row < 2 * cfg.m; ++row)
      if (rng() % 2) feasible.push_back(row);
    if (feasible.empty()) feasible.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(2 * cfg.m)));
    if (codec.lookup_discrete(z, feasible) != brute_lookup(codec.table(), z, feasible)) ++lookup_bad;
  }
  return {combine_bad == 0 && lookup_bad == 0, {{"combine_mismatches", combine_bad}, {"lookup_mismatches", lookup_bad}}};
}

// ---------------------------------------------------------------- 3

Matrix<double> random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix<double> m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Outcome gradient_checks() {
  using nn::Activation;
  std::mt19937_64 rng(7);
  const std::vector<Activation> acts{Activation::relu, Activation::tanh, Activation::sigmoid, Activation::linear};
  double worst_net = 0.0, worst_table = 0.0;
  int net_instances = 0, table_instances = 0;
  const double h = 1e-5;
  const auto compare = [&](double& worst, double analytic, double numeric) {
    if (std::abs(analytic) < 1e-7 && std::abs(numeric) < 1e-7) return;
    worst = std::max(worst, rel_err(analytic, numeric));
  };

  for (int trial = 0; trial < 24; ++trial) {
    std::vector<int> hidden;
    for (int d = 0; d < trial % 4; ++d) hidden.push_back(4 + static_cast<int>(rng() % 61));
    const int in = 1 + static_cast<int>(rng() % 6), out = 1 + static_cast<int>(rng() % 4);
    auto net = nn::DenseNet<double>::mlp(in, hidden, out, acts[static_cast<std::size_t>(trial) % 3],
                                         acts[static_cast<std::size_t>(trial / 3) % 4]);
    net.kaiming_init(static_cast<std::uint64_t>(trial));
    for (auto& l : net.layers()) l.bias = random_matrix(1, static_cast<int>(l.bias.size()), rng, 0.1);
    const auto x = random_matrix(3, in, rng);
    const auto w = random_matrix(3, out, rng);
    const auto probe = [&](const Matrix<double>& xi) { return (net.forward(xi).array() * w.array()).sum(); };
    nn::ForwardCache<double> cache;
    net.forward(x, cache);
    Matrix<double> dx;
    const auto g = net.backward(cache, w, &dx);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto& W = net.layers()[l].weight;
      for (int k = 0; k < 6; ++k) {
        const int r = static_cast<int>(rng() % static_cast<std::uint64_t>(W.rows()));
        const int c = static_cast<int>(rng() % static_cast<std::uint64_t>(W.cols()));
        const double keep = W(r, c);
        W(r, c) = keep + h;
        const double up = probe(x);
        W(r, c) = keep - h;
        const double down = probe(x);
        W(r, c) = keep;
        compare(worst_net, g.weight[l](r, c), (up - down) / (2 * h));
      }
    }
    for (int r = 0; r < x.rows(); ++r) {
      for (int c = 0; c < x.cols(); ++c) {
        auto xp = x, xm = x;
        xp(r, c) += h;
        xm(r, c) -= h;
        compare(worst_net, dx(r, c), (probe(xp) - probe(xm)) / (2 * h));
      }
    }
    ++net_instances;
  }

  for (int trial = 0; trial < 20; ++trial) {
    CodecConfig cfg;
    cfg.m = 1 + trial % 3;
    cfg.kappa1 = 2 + trial % 3;
    cfg.kappa2 = 3 + trial % 4;
    cfg.state_dim = 4;
    cfg.hidden = {16, 16};
    auto codec = ActionCodec<float>(cfg, static_cast<std::uint64_t>(100 + trial)).cast<double>();
    codec.table() *= 0.8;
    std::mt19937_64 brng(static_cast<std::uint64_t>(trial));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CodecBatch<double> batch;
    batch.states.resize(5, cfg.state_dim);
    batch.a_con.resize(5, 1);
    for (int r = 0; r < 5; ++r) {
      for (int k = 0; k < cfg.state_dim; ++k) batch.states(r, k) = u(brng);
      batch.a_con(r, 0) = u(brng);
      batch.a_dis.push_back(static_cast<int>(brng() % static_cast<std::uint64_t>(2 * cfg.m)));
    }
    const Matrix<double> prior = Matrix<double>::Zero(5, cfg.kappa2);
    const auto grad = codec.l1_table_gradient(batch);
    for (int r = 0; r < codec.table().rows(); ++r) {
      for (int k = 0; k < codec.table().cols(); ++k) {
        const double keep = codec.table()(r, k);
        codec.table()(r, k) = keep + 1e-6;
        const double up = codec.compute_losses(batch, prior).l1;
        codec.table()(r, k) = keep - 1e-6;
        const double down = codec.compute_losses(batch, prior).l1;
        codec.table()(r, k) = keep;
        compare(worst_table, grad(r, k), (up - down) / 2e-6);
      }
    }
    ++table_instances;
  }
  const bool ok = worst_net < 1e-4 && worst_table < 1e-4 && net_instances >= 20 && table_instances >= 20;
  return {ok,
          {{"network_instances", net_instances},
           {"network_max_rel_error", worst_net},
           {"table_instances", table_instances},
           {"table_max_rel_error", worst_table}}};
}

// ---------------------------------------------------------------- 4

bool same_table(const Matrix<float>& a, const Matrix<float>& b) { return (a.array() == b.array()).all(); }

Outcome routing_isolation() {
  CodecConfig cfg;
  cfg.m = 4;
  cfg.kappa1 = 3;
  cfg.kappa2 = 5;
  cfg.state_dim = 7;
  cfg.hidden = {16, 16};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CodecBatch<float> batch;
  batch.states.resize(16, cfg.state_dim);
  batch.a_con.resize(16, 1);
  for (int r = 0; r < 16; ++r) {
    for (int k = 0; k < cfg.state_dim; ++k) batch.states(r, k) = static_cast<float>(u(rng));
    batch.a_con(r, 0) = static_cast<float>(u(rng));
    batch.a_dis.push_back(static_cast<int>(rng() % 8));
  }
  ActionCodec<float> base(cfg, 8);
  const Matrix<float> prior = base.sample_prior(16);

  // changed flags in the order encoder, decoder, table, discriminator
  const auto changed = [&](const ActionCodec<float>& c) {
    return std::vector<bool>{!c.encoder().same_parameters(base.encoder()), !c.decoder().same_parameters(base.decoder()),
                             !same_table(c.table(), base.table()),
                             !c.discriminator().same_parameters(base.discriminator())};
  };
  auto l1 = base, l2 = base, l3 = base;
  l1.reconstruction_update(batch);
  l2.discriminator_update(batch, prior);
  l3.encoder_adversarial_update(batch);
  const bool ok1 = changed(l1) == std::vector<bool>{true, true, true, false};
  const bool ok2 = changed(l2) == std::vector<bool>{false, false, false, true};
  const bool ok3 = changed(l3) == std::vector<bool>{true, false, false, false};
  return {ok1 && ok2 && ok3, {{"l1_only", ok1}, {"l2_only", ok2}, {"l3_only", ok3}}};
}

// ---------------------------------------------------------------- 5

Outcome env_feasibility() {
  nlohmann::json detail;
  bool ok = true;
  for (auto type : {DeploymentType::A, DeploymentType::R}) {
    long violations = 0, replay_bad = 0, completed = 0;
    for (int trace = 0; trace < 1000; ++trace) {
      const auto spec = generate_deployment(type, 10, 4, {}, trace);
      std::mt19937_64 rng(derive_seed(static_cast<std::uint64_t>(trace), 5));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      auto s = reset(spec);
      std::vector<JointAction> actions;
      while (s.terminal == Terminal::running && s.stage_count < default_max_stages(spec.n())) {
        const auto feasible = feasible_discrete(s, spec);
        const int a_dis = feasible[rng() % feasible.size()];
        const auto a = physical_times(a_dis, u(rng), s, spec);
        actions.push_back(a);
        s = apply_action(s, spec, a).state;
        if (s.drone.energy < 0.0 || s.drone.energy > s.drone.capacity + kEnergyTolerance) ++violations;
        if (std::abs(s.ledger.total() - s.drone_clock) > 1e-9 * std::max(1.0, s.drone_clock)) ++violations;
      }
      completed += s.terminal == Terminal::completed;
      if (s.terminal == Terminal::completed && std::abs(makespan(s) - s.ledger.total()) > 1e-9 * makespan(s)) ++violations;
      auto r = reset(spec);
      for (const auto& a : actions) r = apply_action(r, spec, a).state;
      if (!(r == s)) ++replay_bad;
    }
    ok &= violations == 0 && replay_bad == 0;
    detail[to_string(type)] = {{"traces", 1000}, {"violations", violations}, {"replay_mismatches", replay_bad},
                               {"completed", completed}};
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 6, 7, 9

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.scenario.type = DeploymentType::A;
  c.scenario.n = 10;
  c.scenario.m = 4;
  c.scenario.seed = 7;
  c.model.kind = ModelKind::hadmc;
  c.train = desk_scale_train_config();
  c.train.eval_episodes = 20;
  return c;
}

double time_share(const ComparisonSummary& s) {
  const double total = s.t_obs + s.t_chg + s.t_wait + s.t_fly;
  return total > 0.0 ? s.t_obs / total : 0.0;
}

struct DeskRun {
  Outcome pretrain;
  Outcome learning;
  Outcome profile;
};

DeskRun desk_run(const fs::path& work) {
  DeskRun out;
  const auto cfg = desk_config();
  const auto dir = work / "desk";
  fs::create_directories(dir);
  io::write_json_atomic(dir / "resolved_config.json", experiment_config_to_json(cfg));
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(cfg.scenario, cfg.model, cfg.train);
  trainer.pretrain();
  const double pretrain_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const EpisodeOptions options{cfg.train.reward, cfg.train.max_stages};
  const auto held = build_pretrain_buffer(make_deployments(cfg.scenario, DeploymentSet::eval), 2000,
                                          derive_seed(cfg.train.seed, 25), options);
  std::vector<const PretrainTuple*> held_tuples;
  for (std::size_t i = 0; i < held.size(); ++i) held_tuples.push_back(&held.at(i));
  const double mse = reconstruction_mse(trainer.codec(), held_tuples);
  const auto& log = trainer.report().pretrain;
  const double l1_first = log.empty() ? 0.0 : log.front().l1;
  const double l1_last = log.empty() ? 0.0 : log.back().l1;
  out.pretrain = {!log.empty() && l1_last <= 0.5 * l1_first && mse < 0.05,
                  {{"n_pi", cfg.train.n_pi},
                   {"b_pi", cfg.train.b_pi},
                   {"buffer", cfg.train.pretrain_buffer},
                   {"l1_first_window", l1_first},
                   {"l1_last_window", l1_last},
                   {"heldout_a_con_mse", mse},
                   {"seconds", pretrain_seconds}}};
  std::printf("  pretraining done in %.0f s\n", pretrain_seconds);
  std::fflush(stdout);

  trainer.warmup();
  for (long next = cfg.train.eval_every; !trainer.finished(); next += cfg.train.eval_every) {
    trainer.run_until(next);
    const auto& row = trainer.report().rows.back();
    std::printf("  step %ld: mean reward %.3f, completion %.2f\n", row.step, row.mean_reward, row.completion_rate);
    std::fflush(stdout);
  }
  const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  trainer.write_checkpoints(dir / "hadmc");
  io::write_text_atomic(dir / "hadmc" / "report.csv", eval_rows_to_csv(trainer.report().rows));

  const auto test = make_deployments(cfg.scenario, DeploymentSet::test);
  std::shared_ptr<const Controller> hadmc = trainer.controller();
  const std::vector<NamedController> models{{"hadmc", hadmc}, {"greedy", std::make_shared<GreedyController>()}};
  const auto rows = run_comparison(models, test, cfg.scenario.tag(), options);
  io::write_text_atomic(dir / "comparison.csv", comparison_to_csv(rows));
  const auto summary = summarize(rows);
  io::write_text_atomic(dir / "comparison_summary.csv", summary_to_csv(summary));

  std::map<int, double> h_obj, g_obj;
  for (const auto& r : rows) (r.model == "hadmc" ? h_obj : g_obj)[r.deployment_id] = r.objective;
  int at_least = 0;
  for (const auto& [id, v] : h_obj) at_least += v >= g_obj[id];
  const auto find = [&](const std::string& name) {
    return *std::find_if(summary.begin(), summary.end(), [&](const auto& s) { return s.model == name; });
  };
  const auto hs = find("hadmc"), gs = find("greedy");
  const double frac = static_cast<double>(at_least) / static_cast<double>(h_obj.size());
  out.learning = {hs.completion_rate >= 0.95 && hs.mean_objective >= 0.9 * gs.mean_objective && frac >= 0.6,
                  {{"n_mu", cfg.train.n_mu},
                   {"test_deployments", h_obj.size()},
                   {"hadmc_completion_rate", hs.completion_rate},
                   {"hadmc_mean_objective", hs.mean_objective},
                   {"greedy_completion_rate", gs.completion_rate},
                   {"greedy_mean_objective", gs.mean_objective},
                   {"fraction_hadmc_at_least_greedy", frac},
                   {"final_eval", eval_rows_to_csv({trainer.report().rows.back()})},
                   {"seconds", train_seconds}}};

  // greedy twice on the same deployments must agree byte for byte
  const std::vector<NamedController> greedy_only{{"greedy", std::make_shared<GreedyController>()}};
  const bool deterministic = comparison_to_csv(run_comparison(greedy_only, test, cfg.scenario.tag(), options)) ==
                             comparison_to_csv(run_comparison(greedy_only, test, cfg.scenario.tag(), options));
  out.profile = {deterministic && time_share(gs) >= time_share(hs),
                 {{"greedy_deterministic", deterministic},
                  {"greedy_observing_share", time_share(gs)},
                  {"hadmc_observing_share", time_share(hs)}}};
  return out;
}

// ---------------------------------------------------------------- 8

Outcome sweep_trend(const fs::path& work) {
  ScenarioConfig sc;
  sc.n = 10;
  sc.m = 4;
  sc.seed = 7;
  SweepConfig sw = default_sweep_config();
  sw.points = {{1, 1}, {9, 14}};
  sw.n_pi = 2000;
  sw.b_pi = 256;
  sw.buffer = 10000;
  ModelConfig model;
  nlohmann::json runs = nlohmann::json::array();
  int holds = 0;
  std::string csv;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pts = latent_dim_sweep(sc, model, {}, sw, seed);
    const bool ok = pts[1].discrete_variance <= pts[0].discrete_variance;
    holds += ok;
    runs.push_back({{"seed", seed}, {"variance_1_1", pts[0].discrete_variance}, {"variance_9_14", pts[1].discrete_variance}});
    if (seed == 1) csv = sweep_to_csv(pts);
  }
  fs::create_directories(work / "sweep");
  io::write_text_atomic(work / "sweep" / "sweep.csv", csv);
  return {holds >= 4, {{"n_pi", sw.n_pi}, {"b_pi", sw.b_pi}, {"seeds_holding", holds}, {"runs", runs}}};
}

// ---------------------------------------------------------------- 10

std::map<std::string, std::string> train_and_collect(const fs::path& dir) {
  ExperimentConfig c;
  c.scenario.n = 10;
  c.scenario.m = 4;
  c.scenario.seed = 3;
  c.train = desk_scale_train_config();
  c.train.n_pi = 500;
  c.train.b_pi = 256;
  c.train.pretrain_buffer = 2000;
  c.train.n_mu = 3000;
  c.train.eval_every = 1000;
  c.train.eval_episodes = 10;
  c.train.seed = 11;
  Trainer t(c.scenario, c.model, c.train);
  t.run_all();
  fs::remove_all(dir);
  t.write_checkpoints(dir);
  io::write_text_atomic(dir / "report.csv", eval_rows_to_csv(t.report().rows));
  io::write_text_atomic(dir / "losses.csv", loss_rows_to_csv(t.report().losses));
  io::write_text_atomic(dir / "pretrain.csv", pretrain_rows_to_csv(t.report().pretrain));
  io::write_text_atomic(dir / "snapshot.bin", t.snapshot());
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = io::read_text(e.path());
  return files;
}

Outcome reproducibility(const fs::path& work) {
  const auto a = train_and_collect(work / "repro_a");
  const auto b = train_and_collect(work / "repro_b");
  nlohmann::json differing = nlohmann::json::array();
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) differing.push_back(name);
  }
  const bool ok = a.size() == b.size() && differing.empty() && !a.empty();
  nlohmann::json names = nlohmann::json::array();
  for (const auto& [name, bytes] : a) names.push_back(name);
  return {ok, {{"files", names}, {"differing", differing}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
  std::map<int, Outcome> results;
  std::map<int, double> seconds;
  const auto timed = [&](int k, const std::function<Outcome()>& fn) {
    if (!wanted(k)) return;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      results[k] = fn();
    } catch (const std::exception& e) {
      results[k] = {false, {{"exception", e.what()}}};
    }
    seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  timed(1, reward_oracles);
  timed(2, codec_round_trips);
  timed(3, gradient_checks);
  timed(4, routing_isolation);
  timed(5, env_feasibility);
  if (wanted(6) || wanted(7) || wanted(9)) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto run = desk_run(work);
      results[6] = run.pretrain;
      results[7] = run.learning;
      results[9] = run.profile;
    } catch (const std::exception& e) {
      for (int k : {6, 7, 9}) results[k] = {false, {{"exception", e.what()}}};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (int k : {6, 7, 9}) seconds[k] = s;
  }
  timed(8, [&] { return sweep_trend(work); });
  timed(10, [&] { return reproducibility(work); });

  static const std::map<int, std::string> names{
      {1, "reward oracles"},        {2, "codec round trips"},     {3, "gradient checks"},
      {4, "gradient routing"},      {5, "env feasibility"},       {6, "decoder pretraining"},
      {7, "desk-scale vs greedy"},  {8, "latent sweep trend"},    {9, "greedy time profile"},
      {10, "reproducibility"}};
  nlohmann::json summary = nlohmann::json::object();
  bool all = true;
  for (const auto& [k, r] : results) {
    if (!wanted(k)) continue;
    all &= r.pass;
    std::printf("criterion %d (%s): %s  %s\n", k, names.at(k).c_str(), r.pass ? "PASS" : "FAIL", r.detail.dump().c_str());
    summary[std::to_string(k)] = {{"name", names.at(k)}, {"pass", r.pass}, {"seconds", seconds[k]}, {"detail", r.detail}};
  }
  io::write_json_atomic(fs::path(work) / "acceptance.json", summary);
  return all ? 0 : 1;
}
