#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hadmc/nn.hpp"
#include "hadmc/replay.hpp"

namespace hadmc {

struct PolicyHyper {
  double sigma = 0.1;         // exploration noise std
  double sigma_target = 0.4;  // target-policy smoothing std
  double noise_clip = 0.5;
  double discount = 0.995;
  double lr = 4e-5;
  double delta = 5e-3;        // soft-update rate
  int policy_delay = 30;
  std::vector<int> hidden{256, 256};

  void validate() const;
  bool operator==(const PolicyHyper&) const = default;
};

nlohmann::json policy_hyper_to_json(const PolicyHyper& h);
PolicyHyper policy_hyper_from_json(const nlohmann::json& doc, const std::string& path);

struct PolicyBatch {
  nn::Matrix<float> s;       // B x state_dim
  nn::Matrix<float> latent;  // B x action_dim
  nn::Matrix<float> r;       // B x 1
  nn::Matrix<float> s_next;  // B x state_dim
  nn::Matrix<float> done;    // B x 1, 1 for terminal transitions
};

PolicyBatch make_policy_batch(const std::vector<const PolicyTuple*>& tuples);

/// y = r if terminal, else r + discount * min(q1, q2).
double td3_target(double r, bool terminal, double q1, double q2, double discount);

struct PolicyStepReport {
  double critic_loss = 0.0;
  bool actor_updated = false;
  double actor_loss = 0.0;
};

/// Deterministic actor with twin critics and target copies. The action is
/// a single bounded vector; HaDMC reads it as z (first kappa1) ++ x.
class LatentPolicy {
 public:
  LatentPolicy() = default;
  LatentPolicy(int state_dim, int action_dim, PolicyHyper hyper, std::uint64_t seed);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const PolicyHyper& hyper() const { return hyper_; }
  long critic_updates() const { return critic_updates_; }
  long actor_updates() const { return actor_updates_; }

  /// actor(s) with no noise.
  std::vector<float> act(const std::vector<float>& s) const;
  /// actor(s) + N(0, sigma) per component, clamped to [-1, 1].
  std::vector<float> select_action(const std::vector<float>& s, double sigma);
  /// target_actor(s') + clip(N(0, sigma'), -c, c), clamped to [-1, 1].
  nn::Matrix<float> target_actions(const nn::Matrix<float>& s_next, double sigma_target, double clip);

  /// TD targets for a batch, drawing target-policy noise.
  nn::Matrix<float> td_targets(const PolicyBatch& batch);
  /// One Adam step for each critic on the mean squared TD error against
  /// `targets`. Returns the loss averaged over both critics.
  double critic_update(const PolicyBatch& batch, const nn::Matrix<float>& targets);
  /// One ascent step on mean critic1(s, actor(s)); returns -mean Q.
  double actor_update(const PolicyBatch& batch);
  void update_targets();

  /// Critic update; every policy_delay-th call also runs the actor update
  /// and the soft target updates.
  PolicyStepReport train_step(const PolicyBatch& batch);

  nn::DenseNet<float>& actor() { return actor_; }
  const nn::DenseNet<float>& actor() const { return actor_; }
  nn::DenseNet<float>& critic(int i) { return i == 0 ? critic1_ : critic2_; }
  const nn::DenseNet<float>& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  const nn::DenseNet<float>& target_actor() const { return actor_t_; }
  const nn::DenseNet<float>& target_critic(int i) const { return i == 0 ? critic1_t_ : critic2_t_; }
  std::mt19937_64& rng() { return rng_; }

  nlohmann::json to_json() const;
  static LatentPolicy from_json(const nlohmann::json& doc, const std::string& path = "");

  void save_state(io::BinaryWriter& w) const;
  void load_state(io::BinaryReader& r);

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  PolicyHyper hyper_;
  nn::DenseNet<float> actor_, critic1_, critic2_;
  nn::DenseNet<float> actor_t_, critic1_t_, critic2_t_;
  nn::Adam<float> actor_opt_, critic1_opt_, critic2_opt_;
  long critic_updates_ = 0;
  long actor_updates_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace hadmc
