#include "hadmc/reward.hpp"

#include <algorithm>

#include "hadmc/errors.hpp"

namespace hadmc {

void RewardParams::validate() const {
  if (!(xi2 > 0.0 && xi2 < 1.0)) throw ContractViolation("RewardParams: xi2 must lie in (0, 1)");
  if (!(xi3 < 0.0)) throw ContractViolation("RewardParams: xi3 must be negative");
  if (!(xi4 > 0.0)) throw ContractViolation("RewardParams: xi4 must be positive");
  if (!(xi1_scale >= 0.0)) throw ContractViolation("RewardParams: xi1_scale must be nonnegative");
}

namespace {

// p_{i+1}, with p_{n+1} standing for the depot.
Point2D next_target(const DeploymentSpec& spec, std::size_t i) {
  return i < spec.n() ? spec.pois[i].position : spec.depot();
}

double drone_time(const DeploymentSpec& spec, Point2D a, Point2D b) {
  return travel_time(a, b, spec.params.drone_speed);
}

}  // namespace

double xi1(const RewardContext& ctx, const RewardParams& params) {
  const auto& spec = ctx.spec;
  const std::size_t i = ctx.before.next_poi;
  if (i >= spec.n()) return 0.0;
  const Point2D x = ctx.before.drone.position;
  const Point2D p = spec.pois[i].position;
  const Point2D c_k = spec.charge_points.at(static_cast<std::size_t>(ctx.action.a_tilde)).position;

  const double dt1 = std::max(1.0, drone_time(spec, x, p) + drone_time(spec, p, c_k));
  const double de1 = spec.params.gamma_f * dt1;
  const double de1_prime = de1 + spec.params.gamma_o * spec.pois[i].tau_max;
  const double e_x = ctx.before.drone.energy;
  if (de1_prime <= e_x && de1 <= spec.params.energy_capacity / 2.0) return params.xi1_scale / dt1;
  return 0.0;
}

double reward_observe(const RewardContext& ctx, const RewardParams& params) {
  const auto& after = ctx.after;
  const std::size_t observed = after.next_poi;  // i + 1
  if (observed == 0) return 0.0;
  const std::size_t idx = observed - 1;
  const double flight = std::max(kTimeEpsilon, drone_time(ctx.spec, ctx.before.drone.position, ctx.spec.pois[idx].position));
  const double efficiency = static_cast<double>(observed) * utility_sum(after, ctx.spec) / makespan(after);
  return efficiency * (after.assigned_tau[idx] / flight + xi1(ctx, params));
}

double reward_charge(const RewardContext& ctx, const RewardParams& params) {
  const auto& spec = ctx.spec;
  const auto& before = ctx.before;
  const std::size_t i = before.next_poi;
  if (i == 0) return 0.0;

  const auto k = static_cast<std::size_t>(ctx.action.a_tilde);
  const Point2D x = before.drone.position;
  const Point2D c_k = spec.charge_points.at(k).position;
  const double fly_to_ck = drone_time(spec, x, c_k);
  const double e_x = before.drone.energy;
  const double de2 = spec.params.gamma_f * fly_to_ck;
  if (de2 >= params.xi2 * e_x) return 0.0;

  const double e_k = std::max(kTimeEpsilon, e_x - de2);
  const double charger_move = travel_time(before.charger.position, c_k, spec.params.charger_speed);
  const double dt2 = std::max(1.0, std::max(fly_to_ck, charger_move)) + drone_time(spec, c_k, next_target(spec, i));
  const double tau_eff = ctx.after.charge_records.at(k);
  const double efficiency = static_cast<double>(i) * utility_sum(ctx.after, spec) / makespan(ctx.after);
  return efficiency * (spec.params.energy_capacity / e_k) * (tau_eff / dt2);
}

double reward_fail(const RewardContext& ctx, const RewardParams& params) {
  const auto& spec = ctx.spec;
  const auto& after = ctx.after;
  double achieved = 0.0;
  for (std::size_t l = 0; l < after.next_poi && l < spec.n(); ++l) {
    achieved += utility_nu(after.assigned_tau[l], spec.pois[l].tau_min, spec.pois[l].tau_max);
  }
  return params.xi3 * (static_cast<double>(spec.n()) - achieved);
}

double reward_complete(const RewardContext& ctx, const RewardParams& params) {
  // The drone clock at depot arrival equals t(E_n) + t(p_n, c_0) for a
  // direct return and also covers detours to charge after p_n.
  return params.xi4 * utility_sum(ctx.after, ctx.spec) / makespan(ctx.after);
}

double dispatch(const RewardContext& ctx, const RewardParams& params) {
  switch (ctx.kase) {
    case StageCase::obs: return reward_observe(ctx, params);
    case StageCase::chg: return reward_charge(ctx, params);
    case StageCase::fail: return reward_fail(ctx, params);
    case StageCase::end: return reward_complete(ctx, params);
  }
  throw ContractViolation("dispatch: unknown stage case");
}

}  // namespace hadmc
