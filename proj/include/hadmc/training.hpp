#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hadmc/action_codec.hpp"
#include "hadmc/episode.hpp"
#include "hadmc/latent_policy.hpp"
#include "hadmc/replay.hpp"
#include "hadmc/scenario.hpp"

namespace hadmc {

enum class ModelKind { hadmc, hadmc_minus_aae, hadmc_minus_ml, td3_direct, dqn_disc, greedy };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
/// Kinds trained by the latent (TD3-style) loop.
bool uses_latent_policy(ModelKind k);

/// Which deployments a run trains, monitors and is finally judged on.
struct ScenarioConfig {
  DeploymentType type = DeploymentType::A;
  int n = 10;
  int m = 4;
  std::int64_t seed = 0;
  int train_count = 100;  // training pool
  int eval_count = 50;    // frozen evaluation during training
  int test_count = 20;    // held-out comparison set
  SystemParams params;
  GenerationOptions generation;

  void validate() const;
  std::string tag() const { return scenario_tag_for(type, n, m); }
};

nlohmann::json scenario_config_to_json(const ScenarioConfig& c);
ScenarioConfig scenario_config_from_json(const nlohmann::json& doc, const std::string& path);

enum class DeploymentSet { train, eval, test };

/// Seed of deployment `index` in `set`; the three sets never share seeds.
std::int64_t deployment_seed(const ScenarioConfig& c, DeploymentSet set, int index);
std::vector<DeploymentSpec> make_deployments(const ScenarioConfig& c, DeploymentSet set);

struct ModelConfig {
  ModelKind kind = ModelKind::hadmc;
  int kappa1 = 6;
  int kappa2 = 14;
  std::vector<int> hidden{256, 256};  // codec networks and DQN value net
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  double table_init_std = 1.0;
  InferencePath inference = InferencePath::decoder_only;

  void validate() const;
};

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& doc, const std::string& path);

/// Codec settings implied by a model kind and scenario.
CodecConfig codec_config_for(const ModelConfig& model, int m, int state_dim, double lr);

struct TrainConfig {
  long n_pi = 200000;
  int b_pi = 1024;
  long pretrain_buffer = 100000;
  long pretrain_log_every = 100;
  long n_mu = 8000000;
  int b_mu = 256;
  long policy_buffer = 10000;
  long warmup_steps = 256;
  bool warmup_random = false;  // uniform latents instead of the noisy initial actor
  long eval_every = 20000;
  int eval_episodes = 50;
  long log_every = 1000;
  std::uint64_t seed = 1;
  int max_stages = 0;
  bool fresh_deployment_per_episode = true;
  PolicyHyper policy;
  RewardParams reward;
  double dqn_eps_start = 1.0;
  double dqn_eps_end = 0.05;
  double dqn_eps_decay_fraction = 0.5;

  void validate() const;
};

/// Step counts for a laptop-sized run (policy 2e5 steps, decoder 2e4).
TrainConfig desk_scale_train_config();

nlohmann::json train_config_to_json(const TrainConfig& c);
/// Keys absent from `doc` keep the values in `base`.
TrainConfig train_config_from_json(const nlohmann::json& doc, const std::string& path, const TrainConfig& base);

/// Maps a state to a joint action. Implementations are read-only and safe
/// to share between threads.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual JointAction decide(const EnvState& s, const DeploymentSpec& spec) const = 0;
};

struct EpisodeResult {
  bool completed = false;
  double total_reward = 0.0;
  double objective = 0.0;  // 0 unless completed
  double makespan = 0.0;
  TimeLedger ledger;
  int stages = 0;
  std::vector<TraceEntry> trace;
};

EpisodeResult run_episode(const Controller& c, const DeploymentSpec& spec, const EpisodeOptions& options);

struct EvalRow {
  long step = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double completion_rate = 0.0;
  double mean_objective = 0.0;  // completed episodes only; 0 if none
  double t_obs = 0.0;
  double t_chg = 0.0;
  double t_wait = 0.0;
  double t_fly = 0.0;
};

/// `episodes` noise-free episodes, episode e on specs[e % specs.size()].
/// Episodes may run on several threads; the row does not depend on it.
EvalRow evaluate_frozen(const Controller& c, const std::vector<DeploymentSpec>& specs, int episodes,
                        const EpisodeOptions& options);

/// Worker count from HADMC_THREADS (default 1).
int worker_threads();
/// Runs fn(i) for i in [0, n) on up to worker_threads() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Uniform random hybrid actions over the feasible set.
RingBuffer<PretrainTuple> build_pretrain_buffer(const std::vector<DeploymentSpec>& specs, std::size_t capacity,
                                                std::uint64_t seed, const EpisodeOptions& options);

template <typename T>
CodecBatch<T> make_codec_batch(const std::vector<const PretrainTuple*>& tuples);

struct PretrainLogRow {
  long step = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

/// n_pi pretrain steps on batches of b_pi; logs the mean losses of every
/// `log_every` steps. Throws TrainingError naming the step on divergence.
std::vector<PretrainLogRow> pretrain_decoder(ActionCodec<float>& codec, const RingBuffer<PretrainTuple>& buffer,
                                             long n_pi, int b_pi, std::mt19937_64& rng, long log_every);

/// Mean squared a_con reconstruction error of encode-then-decode.
double reconstruction_mse(const ActionCodec<float>& codec, const std::vector<const PretrainTuple*>& tuples);

/// Turns a latent vector into a feasible joint action for the latent
/// kinds (hadmc and its ablations, td3_direct).
JointAction decode_latent(ModelKind kind, const ActionCodec<float>* codec, const std::vector<float>& latent,
                          const EnvState& s, const DeploymentSpec& spec);

class LatentController : public Controller {
 public:
  LatentController(ModelKind kind, nn::DenseNet<float> actor, std::optional<ActionCodec<float>> codec);
  JointAction decide(const EnvState& s, const DeploymentSpec& spec) const override;

 private:
  ModelKind kind_;
  nn::DenseNet<float> actor_;
  std::optional<ActionCodec<float>> codec_;
};

struct LossRow {
  long step = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

struct TrainReport {
  std::vector<EvalRow> rows;
  std::vector<LossRow> losses;
  std::vector<PretrainLogRow> pretrain;
};

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows);
std::vector<EvalRow> eval_rows_from_csv(const std::string& text);
std::string loss_rows_to_csv(const std::vector<LossRow>& rows);
std::string pretrain_rows_to_csv(const std::vector<PretrainLogRow>& rows);

/// The latent training loop: decoder pre-training, buffer warm-up, policy
/// training with periodic frozen evaluation. Snapshots capture everything
/// needed to resume bit-identically.
class Trainer {
 public:
  Trainer(ScenarioConfig scenario, ModelConfig model, TrainConfig train);

  void pretrain();
  void warmup();
  /// Trains until `step` policy steps have been taken (capped at n_mu).
  void run_until(long step);
  /// pretrain + warmup + run_until(n_mu), each only if not yet done.
  void run_all();

  long step() const { return step_; }
  bool finished() const { return step_ >= train_.n_mu && phase_ == Phase::training; }
  const TrainReport& report() const { return report_; }
  const LatentPolicy& policy() const { return policy_; }
  const ActionCodec<float>& codec() const { return codec_; }
  const ModelConfig& model() const { return model_; }
  std::unique_ptr<LatentController> controller() const;

  std::string snapshot() const;
  void restore(const std::string& data);

  /// policy.json, codec.json (absent for td3_direct), model.json.
  void write_checkpoints(const std::filesystem::path& dir) const;

 private:
  enum class Phase { fresh, pretrained, warmed, training };
  void env_step(bool random_latent, bool noisy);
  void evaluate_now();
  Episode& episode();
  void next_episode();

  ScenarioConfig scenario_;
  ModelConfig model_;
  TrainConfig train_;
  EpisodeOptions episode_options_;
  std::vector<DeploymentSpec> train_specs_;
  std::vector<DeploymentSpec> eval_specs_;
  int state_dim_ = 0;
  int action_dim_ = 0;
  ActionCodec<float> codec_;
  LatentPolicy policy_;
  RingBuffer<PolicyTuple> buffer_;
  std::mt19937_64 rng_;
  Phase phase_ = Phase::fresh;
  long step_ = 0;
  std::size_t deployment_ = 0;
  std::optional<Episode> episode_;
  TrainReport report_;
  double loss_acc_critic_ = 0.0;
  double loss_acc_actor_ = 0.0;
  long loss_count_ = 0;
  long actor_count_ = 0;
};

/// Controller rebuilt from a checkpoint directory written by any trainer
/// (or a bare greedy tag).
std::unique_ptr<Controller> load_controller(const std::filesystem::path& dir);

}  // namespace hadmc
