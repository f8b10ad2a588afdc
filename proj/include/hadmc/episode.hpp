#pragma once

#include <string>
#include <vector>

#include "hadmc/reward.hpp"
#include "hadmc/sim_env.hpp"

namespace hadmc {

struct EpisodeOptions {
  RewardParams reward;
  int max_stages = 0;  // 0 selects default_max_stages(n)
};

/// Stage budget after which a still-running episode is declared failed.
int default_max_stages(std::size_t n);

/// One episode on one deployment: environment transitions plus the reward
/// engine plus the schedule trace.
class Episode {
 public:
  Episode(DeploymentSpec spec, EpisodeOptions options = {});

  const DeploymentSpec& spec() const { return spec_; }
  const EnvState& state() const { return state_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  double total_reward() const { return total_reward_; }
  bool done() const { return state_.terminal != Terminal::running; }
  int max_stages() const { return max_stages_; }

  StageOutcome step(const JointAction& action);
  void reset();
  /// Resumes from a saved state; the trace restarts empty.
  void restore(EnvState state, double total_reward);

 private:
  DeploymentSpec spec_;
  EpisodeOptions options_;
  int max_stages_;
  EnvState state_;
  std::vector<TraceEntry> trace_;
  double total_reward_ = 0.0;
};

/// CSV with header `stage,case,from_x,...,reward`.
std::string trace_to_csv(const std::vector<TraceEntry>& trace);

}  // namespace hadmc
