#include "hadmc/episode.hpp"

#include <cstdio>

#include "hadmc/errors.hpp"

namespace hadmc {

int default_max_stages(std::size_t n) { return 3 * (static_cast<int>(n) + 1); }

Episode::Episode(DeploymentSpec spec, EpisodeOptions options)
    : spec_(std::move(spec)),
      options_(options),
      max_stages_(options.max_stages > 0 ? options.max_stages : default_max_stages(spec_.n())),
      state_(hadmc::reset(spec_)) {
  options_.reward.validate();
}

void Episode::reset() {
  state_ = hadmc::reset(spec_);
  trace_.clear();
  total_reward_ = 0.0;
}

void Episode::restore(EnvState state, double total_reward) {
  if (state.assigned_tau.size() != spec_.n() || state.charge_records.size() != spec_.m()) {
    throw ContractViolation("Episode::restore: state does not belong to this deployment");
  }
  state_ = std::move(state);
  trace_.clear();
  total_reward_ = total_reward;
}

StageOutcome Episode::step(const JointAction& action) {
  if (done()) throw ContractViolation("Episode::step: episode already terminated");
  Transition t = apply_action(state_, spec_, action);
  if (t.state.terminal == Terminal::running && t.state.stage_count >= max_stages_) {
    t.state.terminal = Terminal::failed;
    t.outcome.kase = StageCase::fail;
    t.outcome.trace.kase = StageCase::fail;
  }
  const RewardContext ctx{spec_, state_, t.state, action, t.outcome.kase};
  t.outcome.reward = dispatch(ctx, options_.reward);
  t.outcome.trace.reward = t.outcome.reward;
  total_reward_ += t.outcome.reward;
  trace_.push_back(t.outcome.trace);
  state_ = std::move(t.state);
  return t.outcome;
}

std::string trace_to_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "stage,case,from_x,from_y,to_x,to_y,flight_t,observe_t,charge_t,wait_t,energy_after,reward\n";
  char line[512];
  for (const auto& e : trace) {
    std::snprintf(line, sizeof line, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.stage,
                  to_string(e.kase).c_str(), e.from.x, e.from.y, e.to.x, e.to.y, e.flight_t, e.observe_t, e.charge_t,
                  e.wait_t, e.energy_after, e.reward);
    out += line;
  }
  return out;
}

}  // namespace hadmc
