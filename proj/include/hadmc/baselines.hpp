#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "hadmc/nn.hpp"
#include "hadmc/replay.hpp"
#include "hadmc/training.hpp"

namespace hadmc {

/// Three-case greedy rule: observe the next PoI for tau_max when the battery
/// covers it; else rendezvous at the charging point nearest that PoI; else
/// at the one nearest the drone; each rendezvous fully recharges. With no
/// productive option left it flies on and fails.
class GreedyController : public Controller {
 public:
  JointAction decide(const EnvState& s, const DeploymentSpec& spec) const override;
};

EpisodeResult greedy_schedule(const DeploymentSpec& spec, const EpisodeOptions& options = {});

/// Bin of v in [-1, 1] among 2m equal bins.
int direct_bin(double v, int m);
/// Feasible action closest to `bin` by index; the lower one on ties.
int snap_to_feasible(int bin, const std::vector<int>& feasible);

inline constexpr std::array<double, 3> kDqnSlotTimes{4.0, 6.0, 8.0};

/// id = a_dis * 3 + slot.
int dqn_action_id(int a_dis, int slot);
std::pair<int, int> dqn_split(int id);
std::vector<int> dqn_feasible_ids(const EnvState& s, const DeploymentSpec& spec);
/// Slot time as tau (clamped into the PoI's range) or as the charge time.
JointAction dqn_joint_action(int id, const EnvState& s, const DeploymentSpec& spec);

class DqnController : public Controller {
 public:
  explicit DqnController(nn::DenseNet<float> qnet);
  JointAction decide(const EnvState& s, const DeploymentSpec& spec) const override;
  /// Highest-value feasible id; lowest id on ties.
  static int best_id(const float* q, const std::vector<int>& feasible);

 private:
  nn::DenseNet<float> qnet_;
};

struct DqnTuple {
  std::vector<float> s;
  int id = 0;
  float r = 0.0f;
  std::vector<float> s_next;
  bool terminal = false;
  std::vector<std::uint8_t> next_mask;  // feasible ids at s_next
};

/// Discretized value-learning baseline sharing the environment, rewards,
/// buffer capacity and soft target updates with the latent learner.
class DqnTrainer {
 public:
  DqnTrainer(ScenarioConfig scenario, ModelConfig model, TrainConfig train);

  void run_all();
  double epsilon(long step) const;
  const TrainReport& report() const { return report_; }
  const nn::DenseNet<float>& qnet() const { return qnet_; }
  void write_checkpoints(const std::filesystem::path& dir) const;

 private:
  void env_step(double eps);
  void learn();

  ScenarioConfig scenario_;
  ModelConfig model_;
  TrainConfig train_;
  EpisodeOptions episode_options_;
  std::vector<DeploymentSpec> train_specs_;
  std::vector<DeploymentSpec> eval_specs_;
  int state_dim_ = 0;
  int num_ids_ = 0;
  nn::DenseNet<float> qnet_, target_;
  nn::Adam<float> opt_;
  RingBuffer<DqnTuple> buffer_;
  std::mt19937_64 rng_;
  std::optional<Episode> episode_;
  long step_ = 0;
  TrainReport report_;
  double loss_acc_ = 0.0;
  long loss_count_ = 0;
};

/// hadmc_minus_aae and hadmc_minus_ml built from `base`.
std::vector<ModelConfig> ablation_configs(const ModelConfig& base = {});

}  // namespace hadmc
