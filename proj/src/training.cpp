#include "hadmc/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "hadmc/baselines.hpp"
#include "hadmc/errors.hpp"
#include "hadmc/rng.hpp"
#include "hadmc/serialize.hpp"

namespace hadmc {

namespace fs = std::filesystem;
using nn::Matrix;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::hadmc: return "hadmc";
    case ModelKind::hadmc_minus_aae: return "hadmc_minus_aae";
    case ModelKind::hadmc_minus_ml: return "hadmc_minus_ml";
    case ModelKind::td3_direct: return "td3_direct";
    case ModelKind::dqn_disc: return "dqn_disc";
    case ModelKind::greedy: return "greedy";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  for (auto k : {ModelKind::hadmc, ModelKind::hadmc_minus_aae, ModelKind::hadmc_minus_ml, ModelKind::td3_direct,
                 ModelKind::dqn_disc, ModelKind::greedy}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("", "unknown model kind \"" + s + "\"");
}

bool uses_latent_policy(ModelKind k) {
  return k == ModelKind::hadmc || k == ModelKind::hadmc_minus_aae || k == ModelKind::hadmc_minus_ml ||
         k == ModelKind::td3_direct;
}

// ---------------------------------------------------------------- configs

void ScenarioConfig::validate() const {
  if (n <= 0 || m <= 0) throw ContractViolation("scenario: n and m must be positive");
  if (train_count <= 0 || eval_count <= 0 || test_count <= 0) {
    throw ContractViolation("scenario: deployment counts must be positive");
  }
  params.validate();
}

nlohmann::json scenario_config_to_json(const ScenarioConfig& c) {
  return {{"type", to_string(c.type)},
          {"n", c.n},
          {"m", c.m},
          {"seed", c.seed},
          {"train_count", c.train_count},
          {"eval_count", c.eval_count},
          {"test_count", c.test_count},
          {"params",
           {{"drone_speed", c.params.drone_speed},
            {"charger_speed", c.params.charger_speed},
            {"energy_capacity", c.params.energy_capacity},
            {"gamma_f", c.params.gamma_f},
            {"gamma_o", c.params.gamma_o},
            {"gamma_c", c.params.gamma_c}}},
          {"generation",
           {{"square_side", c.generation.square_side},
            {"min_separation", c.generation.min_separation},
            {"near_radius", c.generation.near_radius},
            {"tau_min", c.generation.tau_min},
            {"tau_max_choices", c.generation.tau_max_choices},
            {"max_attempts", c.generation.max_attempts}}}};
}

namespace {

template <typename F>
auto as_parse_error(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ContractViolation& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace

ScenarioConfig scenario_config_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  ScenarioConfig c;
  const std::string type = r.string_or("type", "A");
  try {
    c.type = deployment_type_from_string(type);
  } catch (const std::exception& e) {
    throw ParseError(r.child_path("type"), "expected \"A\" or \"R\"");
  }
  c.n = static_cast<int>(r.integer_or("n", c.n));
  c.m = static_cast<int>(r.integer_or("m", c.m));
  c.seed = r.integer_or("seed", 0);
  c.train_count = static_cast<int>(r.integer_or("train_count", c.train_count));
  c.eval_count = static_cast<int>(r.integer_or("eval_count", c.eval_count));
  c.test_count = static_cast<int>(r.integer_or("test_count", c.test_count));
  if (r.has("params")) {
    io::ObjectReader p(r.at("params"), r.child_path("params"));
    auto& q = c.params;
    q.drone_speed = p.number_or("drone_speed", q.drone_speed);
    q.charger_speed = p.number_or("charger_speed", q.charger_speed);
    q.energy_capacity = p.number_or("energy_capacity", q.energy_capacity);
    q.gamma_f = p.number_or("gamma_f", q.gamma_f);
    q.gamma_o = p.number_or("gamma_o", q.gamma_o);
    q.gamma_c = p.number_or("gamma_c", q.gamma_c);
    p.finish();
    as_parse_error(r.child_path("params"), [&] { q.validate(); return 0; });
  }
  if (r.has("generation")) {
    io::ObjectReader g(r.at("generation"), r.child_path("generation"));
    auto& o = c.generation;
    o.square_side = g.number_or("square_side", o.square_side);
    o.min_separation = g.number_or("min_separation", o.min_separation);
    o.near_radius = g.number_or("near_radius", o.near_radius);
    o.tau_min = g.number_or("tau_min", o.tau_min);
    if (g.has("tau_max_choices")) {
      const auto& v = g.at("tau_max_choices");
      if (!v.is_array() || v.empty()) throw ParseError(g.child_path("tau_max_choices"), "expected a non-empty array");
      o.tau_max_choices.clear();
      for (const auto& x : v) {
        if (!x.is_number()) throw ParseError(g.child_path("tau_max_choices"), "expected numbers");
        o.tau_max_choices.push_back(x.get<double>());
      }
    }
    o.max_attempts = g.integer_or("max_attempts", o.max_attempts);
    g.finish();
  }
  r.finish();
  as_parse_error(path, [&] { c.validate(); return 0; });
  return c;
}

std::int64_t deployment_seed(const ScenarioConfig& c, DeploymentSet set, int index) {
  const std::uint64_t base = set == DeploymentSet::train ? 0x100000ULL : set == DeploymentSet::eval ? 0x200000ULL : 0x300000ULL;
  const std::uint64_t s = derive_seed(static_cast<std::uint64_t>(c.seed), base + static_cast<std::uint64_t>(index));
  return static_cast<std::int64_t>(s >> 1);
}

std::vector<DeploymentSpec> make_deployments(const ScenarioConfig& c, DeploymentSet set) {
  const int count = set == DeploymentSet::train ? c.train_count : set == DeploymentSet::eval ? c.eval_count : c.test_count;
  std::vector<DeploymentSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_deployment(c.type, c.n, c.m, c.params, deployment_seed(c, set, i), c.generation));
  }
  return out;
}

void ModelConfig::validate() const {
  if (kappa1 <= 0 || kappa2 <= 0) throw ContractViolation("model: kappa1 and kappa2 must be positive");
  if (!(alpha1 >= 0.0 && alpha1 <= 1.0) || !(alpha2 >= 0.0 && alpha2 <= 1.0)) {
    throw ContractViolation("model: alpha weights must lie in [0, 1]");
  }
  if (!(table_init_std > 0.0)) throw ContractViolation("model: table_init_std must be positive");
  if (hidden.empty()) throw ContractViolation("model: at least one hidden layer");
  for (int w : hidden) {
    if (w <= 0) throw ContractViolation("model: hidden widths must be positive");
  }
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},     {"kappa1", c.kappa1}, {"kappa2", c.kappa2},
          {"hidden", c.hidden},            {"alpha1", c.alpha1}, {"alpha2", c.alpha2},
          {"table_init_std", c.table_init_std}, {"inference", to_string(c.inference)}};
}

ModelConfig model_config_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  ModelConfig c;
  try {
    c.kind = model_kind_from_string(r.string_or("kind", "hadmc"));
  } catch (const ParseError& e) {
    throw ParseError(r.child_path("kind"), e.what());
  }
  c.kappa1 = static_cast<int>(r.integer_or("kappa1", c.kappa1));
  c.kappa2 = static_cast<int>(r.integer_or("kappa2", c.kappa2));
  if (r.has("hidden")) {
    const auto& h = r.at("hidden");
    if (!h.is_array()) throw ParseError(r.child_path("hidden"), "expected an array of widths");
    c.hidden.clear();
    for (const auto& w : h) {
      if (!w.is_number_integer()) throw ParseError(r.child_path("hidden"), "expected integer widths");
      c.hidden.push_back(w.get<int>());
    }
  }
  c.alpha1 = r.number_or("alpha1", c.alpha1);
  c.alpha2 = r.number_or("alpha2", c.alpha2);
  c.table_init_std = r.number_or("table_init_std", c.table_init_std);
  try {
    c.inference = inference_path_from_string(r.string_or("inference", "decoder_only"));
  } catch (const ParseError& e) {
    throw ParseError(r.child_path("inference"), e.what());
  }
  r.finish();
  as_parse_error(path, [&] { c.validate(); return 0; });
  return c;
}

CodecConfig codec_config_for(const ModelConfig& model, int m, int state_dim, double lr) {
  CodecConfig c;
  c.m = m;
  c.kappa1 = model.kappa1;
  c.kappa2 = model.kappa2;
  c.state_dim = state_dim;
  c.hidden = model.hidden;
  c.alpha1 = model.alpha1;
  c.alpha2 = model.alpha2;
  c.lr = lr;
  c.table_init_std = model.table_init_std;
  c.inference = model.inference;
  c.use_aae = model.kind != ModelKind::hadmc_minus_aae;
  c.mutual_learning = model.kind != ModelKind::hadmc_minus_ml;
  return c;
}

void TrainConfig::validate() const {
  if (n_pi < 0 || n_mu < 0) throw ContractViolation("train: step counts must be nonnegative");
  if (b_pi <= 0 || b_mu <= 0) throw ContractViolation("train: batch sizes must be positive");
  if (pretrain_buffer < b_pi) throw ContractViolation("train: pretrain_buffer must hold at least b_pi tuples");
  if (policy_buffer < b_mu) throw ContractViolation("train: policy_buffer must hold at least b_mu tuples");
  if (warmup_steps < b_mu) throw ContractViolation("train: warmup_steps must be at least b_mu");
  if (eval_every <= 0) throw ContractViolation("train: eval_every must be positive");
  if (n_mu > 0 && eval_every > n_mu) throw ContractViolation("train: eval_every must not exceed n_mu");
  if (eval_episodes <= 0) throw ContractViolation("train: eval_episodes must be positive");
  if (log_every <= 0 || pretrain_log_every <= 0) throw ContractViolation("train: log intervals must be positive");
  if (max_stages < 0) throw ContractViolation("train: max_stages must be nonnegative");
  if (!(dqn_eps_start >= 0.0 && dqn_eps_start <= 1.0 && dqn_eps_end >= 0.0 && dqn_eps_end <= dqn_eps_start)) {
    throw ContractViolation("train: need 0 <= dqn_eps_end <= dqn_eps_start <= 1");
  }
  if (!(dqn_eps_decay_fraction > 0.0 && dqn_eps_decay_fraction <= 1.0)) {
    throw ContractViolation("train: dqn_eps_decay_fraction must lie in (0, 1]");
  }
  policy.validate();
  reward.validate();
}

TrainConfig desk_scale_train_config() {
  TrainConfig c;
  c.n_pi = 20000;
  c.pretrain_buffer = 10000;
  c.n_mu = 200000;
  c.eval_every = 20000;
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"n_pi", c.n_pi},
          {"b_pi", c.b_pi},
          {"pretrain_buffer", c.pretrain_buffer},
          {"pretrain_log_every", c.pretrain_log_every},
          {"n_mu", c.n_mu},
          {"b_mu", c.b_mu},
          {"policy_buffer", c.policy_buffer},
          {"warmup_steps", c.warmup_steps},
          {"warmup_random", c.warmup_random},
          {"eval_every", c.eval_every},
          {"eval_episodes", c.eval_episodes},
          {"log_every", c.log_every},
          {"seed", c.seed},
          {"max_stages", c.max_stages},
          {"fresh_deployment_per_episode", c.fresh_deployment_per_episode},
          {"policy", policy_hyper_to_json(c.policy)},
          {"reward", {{"xi1_scale", c.reward.xi1_scale}, {"xi2", c.reward.xi2}, {"xi3", c.reward.xi3}, {"xi4", c.reward.xi4}}},
          {"dqn_eps_start", c.dqn_eps_start},
          {"dqn_eps_end", c.dqn_eps_end},
          {"dqn_eps_decay_fraction", c.dqn_eps_decay_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc, const std::string& path, const TrainConfig& base) {
  io::ObjectReader r(doc, path);
  TrainConfig c = base;
  c.n_pi = r.integer_or("n_pi", c.n_pi);
  c.b_pi = static_cast<int>(r.integer_or("b_pi", c.b_pi));
  c.pretrain_buffer = r.integer_or("pretrain_buffer", c.pretrain_buffer);
  c.pretrain_log_every = r.integer_or("pretrain_log_every", c.pretrain_log_every);
  c.n_mu = r.integer_or("n_mu", c.n_mu);
  c.b_mu = static_cast<int>(r.integer_or("b_mu", c.b_mu));
  c.policy_buffer = r.integer_or("policy_buffer", c.policy_buffer);
  c.warmup_steps = r.integer_or("warmup_steps", c.warmup_steps);
  c.warmup_random = r.boolean_or("warmup_random", c.warmup_random);
  c.eval_every = r.integer_or("eval_every", c.eval_every);
  c.eval_episodes = static_cast<int>(r.integer_or("eval_episodes", c.eval_episodes));
  c.log_every = r.integer_or("log_every", c.log_every);
  const long seed = r.integer_or("seed", static_cast<long>(c.seed));
  if (seed < 0) throw ParseError(r.child_path("seed"), "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.max_stages = static_cast<int>(r.integer_or("max_stages", c.max_stages));
  c.fresh_deployment_per_episode = r.boolean_or("fresh_deployment_per_episode", c.fresh_deployment_per_episode);
  if (r.has("policy")) {
    io::ObjectReader p(r.at("policy"), r.child_path("policy"));
    auto& h = c.policy;
    h.sigma = p.number_or("sigma", h.sigma);
    h.sigma_target = p.number_or("sigma_target", h.sigma_target);
    h.noise_clip = p.number_or("noise_clip", h.noise_clip);
    h.discount = p.number_or("discount", h.discount);
    h.lr = p.number_or("lr", h.lr);
    h.delta = p.number_or("delta", h.delta);
    h.policy_delay = static_cast<int>(p.integer_or("policy_delay", h.policy_delay));
    if (p.has("hidden")) {
      const auto& v = p.at("hidden");
      if (!v.is_array()) throw ParseError(p.child_path("hidden"), "expected an array of widths");
      h.hidden.clear();
      for (const auto& w : v) {
        if (!w.is_number_integer()) throw ParseError(p.child_path("hidden"), "expected integer widths");
        h.hidden.push_back(w.get<int>());
      }
    }
    p.finish();
    as_parse_error(r.child_path("policy"), [&] { h.validate(); return 0; });
  }
  if (r.has("reward")) {
    io::ObjectReader p(r.at("reward"), r.child_path("reward"));
    auto& w = c.reward;
    w.xi1_scale = p.number_or("xi1_scale", w.xi1_scale);
    w.xi2 = p.number_or("xi2", w.xi2);
    w.xi3 = p.number_or("xi3", w.xi3);
    w.xi4 = p.number_or("xi4", w.xi4);
    p.finish();
    as_parse_error(r.child_path("reward"), [&] { w.validate(); return 0; });
  }
  c.dqn_eps_start = r.number_or("dqn_eps_start", c.dqn_eps_start);
  c.dqn_eps_end = r.number_or("dqn_eps_end", c.dqn_eps_end);
  c.dqn_eps_decay_fraction = r.number_or("dqn_eps_decay_fraction", c.dqn_eps_decay_fraction);
  r.finish();
  as_parse_error(path, [&] { c.validate(); return 0; });
  return c;
}

// ------------------------------------------------------------- evaluation

EpisodeResult run_episode(const Controller& c, const DeploymentSpec& spec, const EpisodeOptions& options) {
  Episode ep(spec, options);
  while (!ep.done()) ep.step(c.decide(ep.state(), ep.spec()));
  EpisodeResult r;
  const auto& s = ep.state();
  r.completed = s.terminal == Terminal::completed;
  r.total_reward = ep.total_reward();
  r.objective = r.completed ? objective(s, spec) : 0.0;
  r.makespan = makespan(s);
  r.ledger = s.ledger;
  r.stages = s.stage_count;
  r.trace = ep.trace();
  return r;
}

int worker_threads() {
  const char* env = std::getenv("HADMC_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v <= 0) return 1;
  return static_cast<int>(std::min<long>(v, 256));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      (void)w;
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

EvalRow evaluate_frozen(const Controller& c, const std::vector<DeploymentSpec>& specs, int episodes,
                        const EpisodeOptions& options) {
  if (specs.empty() || episodes <= 0) throw ContractViolation("evaluate_frozen: need deployments and episodes");
  std::vector<EpisodeResult> results(static_cast<std::size_t>(episodes));
  parallel_for(results.size(), [&](std::size_t e) {
    results[e] = run_episode(c, specs[e % specs.size()], options);
    results[e].trace.clear();
  });
  EvalRow row;
  double completed = 0.0, obj = 0.0;
  for (const auto& r : results) {
    row.mean_reward += r.total_reward;
    row.t_obs += r.ledger.observing;
    row.t_chg += r.ledger.charging;
    row.t_wait += r.ledger.wait;
    row.t_fly += r.ledger.flight;
    if (r.completed) {
      completed += 1.0;
      obj += r.objective;
    }
  }
  const double n = static_cast<double>(results.size());
  row.mean_reward /= n;
  for (const auto& r : results) row.std_reward += (r.total_reward - row.mean_reward) * (r.total_reward - row.mean_reward);
  row.std_reward = std::sqrt(row.std_reward / n);
  row.completion_rate = completed / n;
  row.mean_objective = completed > 0 ? obj / completed : 0.0;
  row.t_obs /= n;
  row.t_chg /= n;
  row.t_wait /= n;
  row.t_fly /= n;
  return row;
}

// ------------------------------------------------------------ pretraining

RingBuffer<PretrainTuple> build_pretrain_buffer(const std::vector<DeploymentSpec>& specs, std::size_t capacity,
                                                std::uint64_t seed, const EpisodeOptions& options) {
  if (specs.empty()) throw ContractViolation("build_pretrain_buffer: no deployments");
  RingBuffer<PretrainTuple> buffer(capacity);
  std::mt19937_64 rng(seed);
  while (buffer.size() < capacity) {
    Episode ep(specs[uniform_index(rng, specs.size())], options);
    while (!ep.done() && buffer.size() < capacity) {
      const auto feasible = feasible_discrete(ep.state(), ep.spec());
      const int a_dis = feasible[uniform_index(rng, feasible.size())];
      const double a_con = uniform(rng, -1.0, 1.0);
      PretrainTuple t;
      t.s = encode_state(ep.state(), ep.spec());
      t.a_dis = a_dis;
      t.a_con = static_cast<float>(a_con);
      const auto out = ep.step(physical_times(a_dis, a_con, ep.state(), ep.spec()));
      t.r = static_cast<float>(out.reward);
      t.s_next = encode_state(ep.state(), ep.spec());
      buffer.push(std::move(t));
    }
  }
  return buffer;
}

template <typename T>
CodecBatch<T> make_codec_batch(const std::vector<const PretrainTuple*>& tuples) {
  if (tuples.empty()) throw ContractViolation("make_codec_batch: empty batch");
  const auto n = static_cast<Eigen::Index>(tuples.size());
  const auto sd = static_cast<Eigen::Index>(tuples[0]->s.size());
  CodecBatch<T> b;
  b.states.resize(n, sd);
  b.a_con.resize(n, 1);
  b.a_dis.resize(tuples.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = *tuples[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(t.s.size()) != sd) throw ContractViolation("make_codec_batch: ragged states");
    for (Eigen::Index j = 0; j < sd; ++j) b.states(i, j) = static_cast<T>(t.s[static_cast<std::size_t>(j)]);
    b.a_con(i, 0) = static_cast<T>(t.a_con);
    b.a_dis[static_cast<std::size_t>(i)] = t.a_dis;
  }
  return b;
}

template CodecBatch<float> make_codec_batch<float>(const std::vector<const PretrainTuple*>&);
template CodecBatch<double> make_codec_batch<double>(const std::vector<const PretrainTuple*>&);

std::vector<PretrainLogRow> pretrain_decoder(ActionCodec<float>& codec, const RingBuffer<PretrainTuple>& buffer,
                                             long n_pi, int b_pi, std::mt19937_64& rng, long log_every) {
  if (buffer.size() < static_cast<std::size_t>(b_pi)) {
    throw ContractViolation("pretrain_decoder: buffer holds fewer tuples than b_pi");
  }
  std::vector<PretrainLogRow> log;
  PretrainLogRow acc;
  long count = 0;
  for (long step = 1; step <= n_pi; ++step) {
    CodecLosses l;
    try {
      l = codec.pretrain_step(make_codec_batch<float>(buffer.sample(static_cast<std::size_t>(b_pi), rng)));
    } catch (const TrainingError& e) {
      throw TrainingError("decoder pre-training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    acc.l1 += l.l1;
    acc.l2 += l.l2;
    acc.l3 += l.l3;
    ++count;
    if (step % log_every == 0 || step == n_pi) {
      log.push_back({step, acc.l1 / count, acc.l2 / count, acc.l3 / count});
      acc = {};
      count = 0;
    }
  }
  return log;
}

double reconstruction_mse(const ActionCodec<float>& codec, const std::vector<const PretrainTuple*>& tuples) {
  if (!codec.config().use_aae) throw ContractViolation("reconstruction_mse: codec has no AAE");
  const auto batch = make_codec_batch<float>(tuples);
  const int k1 = codec.config().kappa1;
  Matrix<float> in(static_cast<Eigen::Index>(batch.size()), k1 + 1);
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    in.row(i).leftCols(k1) = codec.table().row(batch.a_dis[static_cast<std::size_t>(i)]);
    in(i, k1) = batch.a_con(i, 0);
  }
  const Matrix<float> out = codec.decoder().forward(codec.encoder().forward(in));
  return static_cast<double>((out.rightCols(1) - batch.a_con).squaredNorm()) / static_cast<double>(in.rows());
}

// --------------------------------------------------------------- decoding

JointAction decode_latent(ModelKind kind, const ActionCodec<float>* codec, const std::vector<float>& latent,
                          const EnvState& s, const DeploymentSpec& spec) {
  const auto feasible = feasible_discrete(s, spec);
  if (kind == ModelKind::td3_direct) {
    if (latent.size() != 2) throw ContractViolation("decode_latent: td3_direct expects two outputs");
    const int m = static_cast<int>(spec.m());
    const int a_dis = snap_to_feasible(direct_bin(latent[0], m), feasible);
    return physical_times(a_dis, latent[1], s, spec);
  }
  if (!uses_latent_policy(kind) || codec == nullptr) throw ContractViolation("decode_latent: no decoder for this kind");
  const int k1 = codec->config().kappa1;
  const int k2 = codec->config().kappa2;
  if (static_cast<int>(latent.size()) != k1 + k2) throw ContractViolation("decode_latent: latent width mismatch");
  const int a_dis = codec->lookup_discrete(latent.data(), feasible);
  const double a_con = codec->decode_continuous(latent.data() + k1);
  return physical_times(a_dis, a_con, s, spec);
}

LatentController::LatentController(ModelKind kind, nn::DenseNet<float> actor, std::optional<ActionCodec<float>> codec)
    : kind_(kind), actor_(std::move(actor)), codec_(std::move(codec)) {
  if (!uses_latent_policy(kind)) throw ContractViolation("LatentController: not a latent model kind");
  if (kind != ModelKind::td3_direct && !codec_) throw ContractViolation("LatentController: codec required");
}

JointAction LatentController::decide(const EnvState& s, const DeploymentSpec& spec) const {
  const auto x = encode_state(s, spec);
  const Matrix<float> in = Eigen::Map<const Matrix<float>>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const Matrix<float> out = actor_.forward(in);
  const std::vector<float> latent(out.data(), out.data() + out.size());
  return decode_latent(kind_, codec_ ? &*codec_ : nullptr, latent, s, spec);
}

// -------------------------------------------------------------------- csv

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows) {
  std::string out = "step,mean_reward,completion_rate,mean_objective,t_obs,t_chg,t_wait,t_fly\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + fmt(r.mean_reward) + "," + fmt(r.completion_rate) + "," + fmt(r.mean_objective) +
           "," + fmt(r.t_obs) + "," + fmt(r.t_chg) + "," + fmt(r.t_wait) + "," + fmt(r.t_fly) + "\n";
  }
  return out;
}

std::vector<EvalRow> eval_rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "step,mean_reward,completion_rate,mean_objective,t_obs,t_chg,t_wait,t_fly") {
    throw ParseError("header", "unexpected training report header");
  }
  std::vector<EvalRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double d = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') throw ParseError("line " + std::to_string(lineno), "non-numeric cell");
      v.push_back(d);
    }
    if (v.size() != 8) throw ParseError("line " + std::to_string(lineno), "expected 8 columns");
    EvalRow r;
    r.step = static_cast<long>(v[0]);
    r.mean_reward = v[1];
    r.completion_rate = v[2];
    r.mean_objective = v[3];
    r.t_obs = v[4];
    r.t_chg = v[5];
    r.t_wait = v[6];
    r.t_fly = v[7];
    rows.push_back(r);
  }
  return rows;
}

std::string loss_rows_to_csv(const std::vector<LossRow>& rows) {
  std::string out = "step,critic_loss,actor_loss\n";
  for (const auto& r : rows) out += std::to_string(r.step) + "," + fmt(r.critic_loss) + "," + fmt(r.actor_loss) + "\n";
  return out;
}

std::string pretrain_rows_to_csv(const std::vector<PretrainLogRow>& rows) {
  std::string out = "step,l1,l2,l3\n";
  for (const auto& r : rows) out += std::to_string(r.step) + "," + fmt(r.l1) + "," + fmt(r.l2) + "," + fmt(r.l3) + "\n";
  return out;
}

// ---------------------------------------------------------------- trainer

Trainer::Trainer(ScenarioConfig scenario, ModelConfig model, TrainConfig train)
    : scenario_(std::move(scenario)), model_(std::move(model)), train_(std::move(train)) {
  scenario_.validate();
  model_.validate();
  train_.validate();
  if (!uses_latent_policy(model_.kind)) {
    throw ContractViolation("Trainer: model kind " + to_string(model_.kind) + " is not trained by the latent loop");
  }
  episode_options_ = {train_.reward, train_.max_stages};
  train_specs_ = make_deployments(scenario_, DeploymentSet::train);
  eval_specs_ = make_deployments(scenario_, DeploymentSet::eval);
  state_dim_ = static_cast<int>(state_dim(static_cast<std::size_t>(scenario_.n), static_cast<std::size_t>(scenario_.m)));
  if (model_.kind == ModelKind::td3_direct) {
    action_dim_ = 2;
  } else {
    action_dim_ = model_.kappa1 + model_.kappa2;
    codec_ = ActionCodec<float>(codec_config_for(model_, scenario_.m, state_dim_, train_.policy.lr), derive_seed(train_.seed, 22));
  }
  policy_ = LatentPolicy(state_dim_, action_dim_, train_.policy, derive_seed(train_.seed, 23));
  buffer_ = RingBuffer<PolicyTuple>(static_cast<std::size_t>(train_.policy_buffer));
  rng_.seed(derive_seed(train_.seed, 24));
}

void Trainer::pretrain() {
  if (phase_ != Phase::fresh) return;
  const bool has_aae = model_.kind == ModelKind::hadmc || model_.kind == ModelKind::hadmc_minus_ml;
  if (has_aae && train_.n_pi > 0) {
    const auto buffer = build_pretrain_buffer(train_specs_, static_cast<std::size_t>(train_.pretrain_buffer),
                                              derive_seed(train_.seed, 20), episode_options_);
    std::mt19937_64 rng(derive_seed(train_.seed, 21));
    report_.pretrain = pretrain_decoder(codec_, buffer, train_.n_pi, train_.b_pi, rng, train_.pretrain_log_every);
  }
  phase_ = Phase::pretrained;
}

Episode& Trainer::episode() {
  if (!episode_) next_episode();
  return *episode_;
}

void Trainer::next_episode() {
  if (train_.fresh_deployment_per_episode) {
    deployment_ = uniform_index(rng_, train_specs_.size());
  } else {
    deployment_ = 0;
  }
  episode_.emplace(train_specs_[deployment_], episode_options_);
}

void Trainer::env_step(bool random_latent, bool noisy) {
  Episode& ep = episode();
  PolicyTuple t;
  t.s = encode_state(ep.state(), ep.spec());
  if (random_latent) {
    t.latent.resize(static_cast<std::size_t>(action_dim_));
    for (auto& v : t.latent) v = static_cast<float>(uniform(rng_, -1.0, 1.0));
  } else {
    t.latent = policy_.select_action(t.s, noisy ? train_.policy.sigma : 0.0);
  }
  const JointAction action =
      decode_latent(model_.kind, model_.kind == ModelKind::td3_direct ? nullptr : &codec_, t.latent, ep.state(), ep.spec());
  const auto out = ep.step(action);
  t.r = static_cast<float>(out.reward);
  t.s_next = encode_state(ep.state(), ep.spec());
  t.terminal = ep.done();
  buffer_.push(std::move(t));
  if (ep.done()) next_episode();
}

void Trainer::warmup() {
  if (phase_ == Phase::fresh) pretrain();
  if (phase_ != Phase::pretrained) return;
  for (long i = 0; i < train_.warmup_steps; ++i) env_step(train_.warmup_random, true);
  phase_ = Phase::warmed;
}

std::unique_ptr<LatentController> Trainer::controller() const {
  std::optional<ActionCodec<float>> codec;
  if (model_.kind != ModelKind::td3_direct) codec = codec_;
  return std::make_unique<LatentController>(model_.kind, policy_.actor(), std::move(codec));
}

void Trainer::evaluate_now() {
  EvalRow row = evaluate_frozen(*controller(), eval_specs_, train_.eval_episodes, episode_options_);
  row.step = step_;
  report_.rows.push_back(row);
}

void Trainer::run_until(long target) {
  if (phase_ == Phase::fresh || phase_ == Phase::pretrained) warmup();
  phase_ = Phase::training;
  const long end = std::min(target, train_.n_mu);
  while (step_ < end) {
    env_step(false, true);
    const auto batch = make_policy_batch(buffer_.sample(static_cast<std::size_t>(train_.b_mu), rng_));
    const auto rep = policy_.train_step(batch);
    ++step_;
    loss_acc_critic_ += rep.critic_loss;
    ++loss_count_;
    if (rep.actor_updated) {
      loss_acc_actor_ += rep.actor_loss;
      ++actor_count_;
    }
    if (step_ % train_.log_every == 0) {
      report_.losses.push_back({step_, loss_acc_critic_ / static_cast<double>(loss_count_),
                                actor_count_ > 0 ? loss_acc_actor_ / static_cast<double>(actor_count_) : 0.0});
      loss_acc_critic_ = loss_acc_actor_ = 0.0;
      loss_count_ = actor_count_ = 0;
    }
    if (step_ % train_.eval_every == 0) evaluate_now();
  }
}

void Trainer::run_all() {
  pretrain();
  warmup();
  run_until(train_.n_mu);
}

namespace {

constexpr const char* kSnapshotMagic = "hadmc-train-snapshot-v1";

void put_state(io::BinaryWriter& w, const EnvState& s) {
  w.doubles({s.drone.position.x, s.drone.position.y, s.drone.speed, s.drone.gamma_f, s.drone.gamma_o, s.drone.energy,
             s.drone.capacity, s.charger.position.x, s.charger.position.y, s.charger.speed, s.charger.gamma_c,
             s.charger.clock, s.drone_clock, s.clock_at_last_poi, s.ledger.flight, s.ledger.observing, s.ledger.charging,
             s.ledger.wait, s.charger_idle});
  w.doubles(s.assigned_tau);
  w.doubles(s.charge_records);
  w.u64(s.next_poi);
  w.i64(s.stage_count);
  w.i64(static_cast<int>(s.terminal));
}

EnvState get_state(io::BinaryReader& r) {
  const auto v = r.doubles();
  if (v.size() != 19) throw ParseError("snapshot.episode", "bad state record");
  EnvState s;
  s.drone = {{v[0], v[1]}, v[2], v[3], v[4], v[5], v[6]};
  s.charger = {{v[7], v[8]}, v[9], v[10], v[11]};
  s.drone_clock = v[12];
  s.clock_at_last_poi = v[13];
  s.ledger = {v[14], v[15], v[16], v[17]};
  s.charger_idle = v[18];
  s.assigned_tau = r.doubles();
  s.charge_records = r.doubles();
  s.next_poi = r.u64();
  s.stage_count = static_cast<int>(r.i64());
  s.terminal = static_cast<Terminal>(r.i64());
  return s;
}

void put_tuple(io::BinaryWriter& w, const PolicyTuple& t) {
  w.floats(t.s);
  w.floats(t.latent);
  w.f32(t.r);
  w.floats(t.s_next);
  w.u64(t.terminal ? 1 : 0);
}

PolicyTuple get_tuple(io::BinaryReader& r) {
  PolicyTuple t;
  t.s = r.floats();
  t.latent = r.floats();
  t.r = r.f32();
  t.s_next = r.floats();
  t.terminal = r.u64() != 0;
  return t;
}

}  // namespace

std::string Trainer::snapshot() const {
  io::BinaryWriter w;
  w.str(kSnapshotMagic);
  w.str(scenario_config_to_json(scenario_).dump());
  w.str(model_config_to_json(model_).dump());
  w.str(train_config_to_json(train_).dump());
  w.i64(static_cast<int>(phase_));
  w.i64(step_);
  w.u64(deployment_);
  w.str(rng_to_string(rng_));
  if (model_.kind != ModelKind::td3_direct) codec_.save_state(w);
  policy_.save_state(w);
  w.u64(buffer_.head());
  w.u64(buffer_.pushes());
  w.u64(buffer_.storage().size());
  for (const auto& t : buffer_.storage()) put_tuple(w, t);
  w.u64(episode_ ? 1 : 0);
  if (episode_) {
    put_state(w, episode_->state());
    w.f64(episode_->total_reward());
  }
  w.u64(report_.rows.size());
  for (const auto& r : report_.rows) {
    w.i64(r.step);
    w.doubles({r.mean_reward, r.std_reward, r.completion_rate, r.mean_objective, r.t_obs, r.t_chg, r.t_wait, r.t_fly});
  }
  w.u64(report_.losses.size());
  for (const auto& r : report_.losses) {
    w.i64(r.step);
    w.f64(r.critic_loss);
    w.f64(r.actor_loss);
  }
  w.u64(report_.pretrain.size());
  for (const auto& r : report_.pretrain) {
    w.i64(r.step);
    w.doubles({r.l1, r.l2, r.l3});
  }
  w.doubles({loss_acc_critic_, loss_acc_actor_});
  w.i64(loss_count_);
  w.i64(actor_count_);
  return w.data();
}

void Trainer::restore(const std::string& data) {
  io::BinaryReader r(data);
  if (r.str() != kSnapshotMagic) throw ParseError("snapshot", "not a training snapshot");
  if (r.str() != scenario_config_to_json(scenario_).dump()) throw ParseError("snapshot.scenario", "scenario differs");
  if (r.str() != model_config_to_json(model_).dump()) throw ParseError("snapshot.model", "model differs");
  if (r.str() != train_config_to_json(train_).dump()) throw ParseError("snapshot.train", "train config differs");
  phase_ = static_cast<Phase>(r.i64());
  step_ = r.i64();
  deployment_ = r.u64();
  if (deployment_ >= train_specs_.size()) throw ParseError("snapshot", "deployment index out of range");
  rng_from_string(rng_, r.str());
  if (model_.kind != ModelKind::td3_direct) codec_.load_state(r);
  policy_.load_state(r);
  const auto head = r.u64();
  const auto pushes = r.u64();
  const auto count = r.u64();
  std::vector<PolicyTuple> items;
  items.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) items.push_back(get_tuple(r));
  buffer_.restore(std::move(items), head, pushes);
  episode_.reset();
  if (r.u64() != 0) {
    auto state = get_state(r);
    const double total = r.f64();
    episode_.emplace(train_specs_[deployment_], episode_options_);
    episode_->restore(std::move(state), total);
  }
  report_ = {};
  for (auto n = r.u64(); n > 0; --n) {
    EvalRow row;
    row.step = r.i64();
    const auto v = r.doubles();
    if (v.size() != 8) throw ParseError("snapshot.report", "bad row");
    row.mean_reward = v[0];
    row.std_reward = v[1];
    row.completion_rate = v[2];
    row.mean_objective = v[3];
    row.t_obs = v[4];
    row.t_chg = v[5];
    row.t_wait = v[6];
    row.t_fly = v[7];
    report_.rows.push_back(row);
  }
  for (auto n = r.u64(); n > 0; --n) {
    LossRow row;
    row.step = r.i64();
    row.critic_loss = r.f64();
    row.actor_loss = r.f64();
    report_.losses.push_back(row);
  }
  for (auto n = r.u64(); n > 0; --n) {
    PretrainLogRow row;
    row.step = r.i64();
    const auto v = r.doubles();
    if (v.size() != 3) throw ParseError("snapshot.pretrain", "bad row");
    row.l1 = v[0];
    row.l2 = v[1];
    row.l3 = v[2];
    report_.pretrain.push_back(row);
  }
  const auto acc = r.doubles();
  if (acc.size() != 2) throw ParseError("snapshot", "bad loss accumulators");
  loss_acc_critic_ = acc[0];
  loss_acc_actor_ = acc[1];
  loss_count_ = r.i64();
  actor_count_ = r.i64();
  if (!r.done()) throw ParseError("snapshot", "trailing bytes");
}

void Trainer::write_checkpoints(const fs::path& dir) const {
  io::write_json_atomic(dir / "policy.json", policy_.to_json());
  if (model_.kind != ModelKind::td3_direct) io::write_json_atomic(dir / "codec.json", codec_.to_json());
  io::write_json_atomic(dir / "model.json", {{"schema_version", 1},
                                             {"model", model_config_to_json(model_)},
                                             {"scenario", scenario_config_to_json(scenario_)},
                                             {"state_dim", state_dim_},
                                             {"action_dim", action_dim_}});
}

std::unique_ptr<Controller> load_controller(const fs::path& dir) {
  if (!fs::exists(dir / "model.json")) {
    throw ParseError((dir / "model.json").string(), "missing model description");
  }
  const auto doc = io::read_json(dir / "model.json");
  io::ObjectReader r(doc, "model.json");
  if (r.integer("schema_version") != 1) throw ParseError("model.json.schema_version", "unsupported version");
  const auto model = model_config_from_json(r.at("model"), "model.json.model");
  r.at("scenario");
  r.integer_or("state_dim", 0);
  r.integer_or("action_dim", 0);
  r.finish();
  if (model.kind == ModelKind::greedy) return std::make_unique<GreedyController>();
  if (model.kind == ModelKind::dqn_disc) {
    return std::make_unique<DqnController>(nn::net_from_json<float>(io::read_json(dir / "qnet.json"), "qnet.json"));
  }
  const auto policy = LatentPolicy::from_json(io::read_json(dir / "policy.json"), "policy.json");
  std::optional<ActionCodec<float>> codec;
  if (model.kind != ModelKind::td3_direct) codec = ActionCodec<float>::from_json(io::read_json(dir / "codec.json"), "codec.json");
  return std::make_unique<LatentController>(model.kind, policy.actor(), std::move(codec));
}

}  // namespace hadmc
