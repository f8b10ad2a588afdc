#pragma once

#include "hadmc/scenario.hpp"
#include "hadmc/sim_env.hpp"

namespace hadmc {

struct RewardParams {
  double xi1_scale = 3.0;  // multiplies the 1/dt1 exploration bonus
  double xi2 = 0.2;        // charge-reward energy threshold fraction
  double xi3 = -20.0;      // failure penalty per unit of unfinished utility
  double xi4 = 40.0;       // completion scale

  bool operator==(const RewardParams&) const = default;
  void validate() const;
};

/// Everything a stage reward depends on. Holds references; the caller keeps
/// the referenced objects alive.
struct RewardContext {
  const DeploymentSpec& spec;
  const EnvState& before;
  const EnvState& after;
  const JointAction& action;
  StageCase kase;
};

/// Lookahead exploration bonus for an observe stage.
double xi1(const RewardContext& ctx, const RewardParams& params);
double reward_observe(const RewardContext& ctx, const RewardParams& params);
double reward_charge(const RewardContext& ctx, const RewardParams& params);
double reward_fail(const RewardContext& ctx, const RewardParams& params);
double reward_complete(const RewardContext& ctx, const RewardParams& params);

/// Picks exactly one of the four rewards by `ctx.kase`.
double dispatch(const RewardContext& ctx, const RewardParams& params);

}  // namespace hadmc
