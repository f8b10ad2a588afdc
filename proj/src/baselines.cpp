#include "hadmc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hadmc/errors.hpp"
#include "hadmc/rng.hpp"
#include "hadmc/serialize.hpp"

namespace hadmc {

namespace fs = std::filesystem;
using nn::Matrix;

namespace {

int nearest_charge_point(const DeploymentSpec& spec, Point2D p) {
  int best = 0;
  double best_d = distance(p, spec.charge_points[0].position);
  for (std::size_t j = 1; j < spec.m(); ++j) {
    const double d = distance(p, spec.charge_points[j].position);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// The charger always rests on a charging point; recover its index.
int charger_index(const EnvState& s, const DeploymentSpec& spec) {
  for (std::size_t j = 0; j < spec.m(); ++j) {
    if (spec.charge_points[j].position == s.charger.position) return static_cast<int>(j);
  }
  return nearest_charge_point(spec, s.charger.position);
}

}  // namespace

JointAction GreedyController::decide(const EnvState& s, const DeploymentSpec& spec) const {
  const auto& p = spec.params;
  const std::size_t i = s.next_poi;
  const int m = static_cast<int>(spec.m());
  const Point2D x = s.drone.position;
  const Point2D target = i < spec.n() ? spec.pois[i].position : spec.depot();
  const double tau = i < spec.n() ? spec.pois[i].tau_max : 0.0;

  JointAction observe;
  observe.a = 1;
  observe.tau = tau;
  observe.a_tilde = i < spec.n() ? charger_index(s, spec) : 0;
  observe.a_dis = m + observe.a_tilde;
  observe.a_con = 1.0;

  const double need = p.gamma_f * travel_time(x, target, p.drone_speed) + p.gamma_o * tau;
  if (need <= s.drone.energy + kEnergyTolerance) return observe;

  const auto rendezvous = [&](int c) -> std::optional<JointAction> {
    const Point2D cp = spec.charge_points[static_cast<std::size_t>(c)].position;
    const double e_k = s.drone.energy - p.gamma_f * travel_time(x, cp, p.drone_speed);
    if (e_k < -kEnergyTolerance) return std::nullopt;
    const double full = std::max(0.0, p.energy_capacity - e_k) / p.gamma_c;
    if (full <= kTimeEpsilon && cp == x) return std::nullopt;  // already here and full: no progress possible
    JointAction a;
    a.a = 0;
    a.a_tilde = c;
    a.a_dis = c;
    a.tau_tilde = full;
    a.a_con = 1.0;
    return a;
  };
  if (auto a = rendezvous(nearest_charge_point(spec, target))) return *a;
  if (auto a = rendezvous(nearest_charge_point(spec, x))) return *a;
  return observe;
}

EpisodeResult greedy_schedule(const DeploymentSpec& spec, const EpisodeOptions& options) {
  return run_episode(GreedyController{}, spec, options);
}

int direct_bin(double v, int m) {
  if (m <= 0) throw ContractViolation("direct_bin: m must be positive");
  if (!std::isfinite(v)) throw ContractViolation("direct_bin: value is not finite");
  const int bins = 2 * m;
  const int b = static_cast<int>(std::floor((std::clamp(v, -1.0, 1.0) + 1.0) / 2.0 * bins));
  return std::clamp(b, 0, bins - 1);
}

int snap_to_feasible(int bin, const std::vector<int>& feasible) {
  if (feasible.empty()) throw ContractViolation("snap_to_feasible: empty feasible set");
  int best = feasible.front();
  for (int f : feasible) {
    const int d = std::abs(f - bin), bd = std::abs(best - bin);
    if (d < bd || (d == bd && f < best)) best = f;
  }
  return best;
}

int dqn_action_id(int a_dis, int slot) {
  if (a_dis < 0 || slot < 0 || slot >= static_cast<int>(kDqnSlotTimes.size())) {
    throw ContractViolation("dqn_action_id: out of range");
  }
  return a_dis * static_cast<int>(kDqnSlotTimes.size()) + slot;
}

std::pair<int, int> dqn_split(int id) {
  if (id < 0) throw ContractViolation("dqn_split: negative id");
  const int k = static_cast<int>(kDqnSlotTimes.size());
  return {id / k, id % k};
}

std::vector<int> dqn_feasible_ids(const EnvState& s, const DeploymentSpec& spec) {
  std::vector<int> out;
  for (int a_dis : feasible_discrete(s, spec)) {
    for (int slot = 0; slot < static_cast<int>(kDqnSlotTimes.size()); ++slot) out.push_back(dqn_action_id(a_dis, slot));
  }
  std::sort(out.begin(), out.end());
  return out;
}

JointAction dqn_joint_action(int id, const EnvState& s, const DeploymentSpec& spec) {
  const auto [a_dis, slot] = dqn_split(id);
  const int m = static_cast<int>(spec.m());
  const auto [a, a_tilde] = split_discrete(a_dis, m);
  const double t = kDqnSlotTimes[static_cast<std::size_t>(slot)];
  JointAction act;
  act.a = a;
  act.a_tilde = a_tilde;
  act.a_dis = a_dis;
  if (a == 1) {
    if (s.next_poi < spec.n()) act.tau = std::clamp(t, spec.pois[s.next_poi].tau_min, spec.pois[s.next_poi].tau_max);
  } else {
    act.tau_tilde = t;
  }
  act.a_con = normalize_time(a_dis, a == 1 ? act.tau : t, s, spec);
  return act;
}

DqnController::DqnController(nn::DenseNet<float> qnet) : qnet_(std::move(qnet)) {}

int DqnController::best_id(const float* q, const std::vector<int>& feasible) {
  if (feasible.empty()) throw ContractViolation("DqnController: empty feasible set");
  int best = feasible.front();
  for (int id : feasible) {
    if (q[id] > q[best] || (q[id] == q[best] && id < best)) best = id;
  }
  return best;
}

JointAction DqnController::decide(const EnvState& s, const DeploymentSpec& spec) const {
  const auto x = encode_state(s, spec);
  const Matrix<float> in = Eigen::Map<const Matrix<float>>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const Matrix<float> q = qnet_.forward(in);
  const auto feasible = dqn_feasible_ids(s, spec);
  if (feasible.back() >= q.cols()) throw ContractViolation("DqnController: value net narrower than the action set");
  return dqn_joint_action(best_id(q.data(), feasible), s, spec);
}

DqnTrainer::DqnTrainer(ScenarioConfig scenario, ModelConfig model, TrainConfig train)
    : scenario_(std::move(scenario)), model_(std::move(model)), train_(std::move(train)) {
  scenario_.validate();
  model_.validate();
  train_.validate();
  episode_options_ = {train_.reward, train_.max_stages};
  train_specs_ = make_deployments(scenario_, DeploymentSet::train);
  eval_specs_ = make_deployments(scenario_, DeploymentSet::eval);
  state_dim_ = static_cast<int>(state_dim(static_cast<std::size_t>(scenario_.n), static_cast<std::size_t>(scenario_.m)));
  num_ids_ = 2 * scenario_.m * static_cast<int>(kDqnSlotTimes.size());
  qnet_ = nn::DenseNet<float>::mlp(state_dim_, model_.hidden, num_ids_, nn::Activation::relu, nn::Activation::linear);
  qnet_.kaiming_init(derive_seed(train_.seed, 30));
  target_ = qnet_;
  opt_ = nn::Adam<float>(qnet_, nn::AdamConfig{train_.policy.lr});
  buffer_ = RingBuffer<DqnTuple>(static_cast<std::size_t>(train_.policy_buffer));
  rng_.seed(derive_seed(train_.seed, 31));
}

double DqnTrainer::epsilon(long step) const {
  const double horizon = train_.dqn_eps_decay_fraction * static_cast<double>(std::max<long>(1, train_.n_mu));
  const double f = std::min(1.0, static_cast<double>(step) / horizon);
  return train_.dqn_eps_start + f * (train_.dqn_eps_end - train_.dqn_eps_start);
}

void DqnTrainer::env_step(double eps) {
  if (!episode_) episode_.emplace(train_specs_[uniform_index(rng_, train_specs_.size())], episode_options_);
  Episode& ep = *episode_;
  DqnTuple t;
  t.s = encode_state(ep.state(), ep.spec());
  const auto feasible = dqn_feasible_ids(ep.state(), ep.spec());
  if (uniform(rng_, 0.0, 1.0) < eps) {
    t.id = feasible[uniform_index(rng_, feasible.size())];
  } else {
    const Matrix<float> in = Eigen::Map<const Matrix<float>>(t.s.data(), 1, state_dim_);
    const Matrix<float> q = qnet_.forward(in);
    t.id = DqnController::best_id(q.data(), feasible);
  }
  const auto out = ep.step(dqn_joint_action(t.id, ep.state(), ep.spec()));
  t.r = static_cast<float>(out.reward);
  t.s_next = encode_state(ep.state(), ep.spec());
  t.terminal = ep.done();
  t.next_mask.assign(static_cast<std::size_t>(num_ids_), 0);
  if (!t.terminal) {
    for (int id : dqn_feasible_ids(ep.state(), ep.spec())) t.next_mask[static_cast<std::size_t>(id)] = 1;
  }
  buffer_.push(std::move(t));
  if (ep.done()) episode_.reset();
}

void DqnTrainer::learn() {
  const auto batch = buffer_.sample(static_cast<std::size_t>(train_.b_mu), rng_);
  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix<float> s(n, state_dim_), s2(n, state_dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.row(i) = Eigen::Map<const nn::RowVector<float>>(batch[static_cast<std::size_t>(i)]->s.data(), state_dim_);
    s2.row(i) = Eigen::Map<const nn::RowVector<float>>(batch[static_cast<std::size_t>(i)]->s_next.data(), state_dim_);
  }
  const Matrix<float> q2 = target_.forward(s2);
  nn::ForwardCache<float> cache;
  const Matrix<float> q = qnet_.forward(s, cache);
  Matrix<float> grad = Matrix<float>::Zero(n, num_ids_);
  const float lambda = static_cast<float>(train_.policy.discount);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = *batch[static_cast<std::size_t>(i)];
    float y = t.r;
    if (!t.terminal) {
      float best = -std::numeric_limits<float>::infinity();
      for (int id = 0; id < num_ids_; ++id) {
        if (t.next_mask[static_cast<std::size_t>(id)]) best = std::max(best, q2(i, id));
      }
      y += lambda * best;
    }
    const float diff = q(i, t.id) - y;
    loss += static_cast<double>(diff) * diff;
    grad(i, t.id) = 2.0f * diff / static_cast<float>(n);
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss)) throw TrainingError("DQN loss is not finite at step " + std::to_string(step_));
  opt_.step(qnet_, qnet_.backward(cache, grad));
  nn::soft_update(target_, qnet_, train_.policy.delta);
  loss_acc_ += loss;
  ++loss_count_;
}

void DqnTrainer::run_all() {
  for (long i = 0; i < train_.warmup_steps; ++i) env_step(1.0);
  while (step_ < train_.n_mu) {
    env_step(epsilon(step_));
    learn();
    ++step_;
    if (step_ % train_.log_every == 0) {
      report_.losses.push_back({step_, loss_acc_ / static_cast<double>(loss_count_), 0.0});
      loss_acc_ = 0.0;
      loss_count_ = 0;
    }
    if (step_ % train_.eval_every == 0) {
      EvalRow row = evaluate_frozen(DqnController(qnet_), eval_specs_, train_.eval_episodes, episode_options_);
      row.step = step_;
      report_.rows.push_back(row);
    }
  }
}

void DqnTrainer::write_checkpoints(const fs::path& dir) const {
  io::write_json_atomic(dir / "qnet.json", nn::net_to_json(qnet_));
  io::write_json_atomic(dir / "model.json", {{"schema_version", 1},
                                             {"model", model_config_to_json(model_)},
                                             {"scenario", scenario_config_to_json(scenario_)},
                                             {"state_dim", state_dim_},
                                             {"action_dim", num_ids_}});
}

std::vector<ModelConfig> ablation_configs(const ModelConfig& base) {
  ModelConfig minus_aae = base;
  minus_aae.kind = ModelKind::hadmc_minus_aae;
  ModelConfig minus_ml = base;
  minus_ml.kind = ModelKind::hadmc_minus_ml;
  return {minus_aae, minus_ml};
}

}  // namespace hadmc
