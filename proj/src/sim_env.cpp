#include "hadmc/sim_env.hpp"

#include <algorithm>
#include <cmath>

#include "hadmc/errors.hpp"

namespace hadmc {

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::running: return "running";
    case Terminal::failed: return "failed";
    case Terminal::completed: return "completed";
  }
  return "?";
}

std::string to_string(StageCase c) {
  switch (c) {
    case StageCase::obs: return "obs";
    case StageCase::chg: return "chg";
    case StageCase::fail: return "fail";
    case StageCase::end: return "end";
  }
  return "?";
}

EnvState reset(const DeploymentSpec& spec) {
  spec.validate();
  const auto& p = spec.params;
  EnvState s;
  s.drone = {spec.depot(), p.drone_speed, p.gamma_f, p.gamma_o, p.energy_capacity, p.energy_capacity};
  s.charger = {spec.depot(), p.charger_speed, p.gamma_c, 0.0};
  s.assigned_tau.assign(spec.n(), 0.0);
  s.charge_records.assign(spec.m(), 0.0);
  return s;
}

std::vector<int> reachable_chargers(const EnvState& s, const DeploymentSpec& spec) {
  std::vector<int> out;
  for (std::size_t j = 0; j < spec.m(); ++j) {
    const double need = s.drone.gamma_f * travel_time(s.drone.position, spec.charge_points[j].position, s.drone.speed);
    if (need <= s.drone.energy + kEnergyTolerance) out.push_back(static_cast<int>(j));
  }
  return out;
}

namespace {

void require_running(const EnvState& s, const char* op) {
  if (s.terminal != Terminal::running) throw ContractViolation(std::string(op) + ": episode already terminated");
}

void require_charge_point(const DeploymentSpec& spec, int j, const char* op) {
  if (j < 0 || static_cast<std::size_t>(j) >= spec.m()) {
    throw ContractViolation(std::string(op) + ": charging point index out of range");
  }
}

Point2D lerp(Point2D a, Point2D b, double t) { return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}; }

// Charger departs for `dest` when the stage starts (or when it frees up).
void move_charger(EnvState& s, const DeploymentSpec& spec, int dest, double stage_start) {
  const Point2D target = spec.charge_points[static_cast<std::size_t>(dest)].position;
  s.charger.clock = std::max(s.charger.clock, stage_start) + travel_time(s.charger.position, target, s.charger.speed);
  s.charger.position = target;
}

// Flies the drone toward `to`. Returns false (and leaves the drone stranded
// at the depletion point) if the battery runs dry on the way.
bool fly(EnvState& s, Point2D to, TraceEntry& trace) {
  const double f = travel_time(s.drone.position, to, s.drone.speed);
  const double need = s.drone.gamma_f * f;
  if (need > s.drone.energy + kEnergyTolerance) {
    const double dt = s.drone.energy / s.drone.gamma_f;
    s.drone.position = lerp(s.drone.position, to, need > 0.0 ? s.drone.energy / need : 0.0);
    s.drone.energy = 0.0;
    s.ledger.flight += dt;
    s.drone_clock += dt;
    trace.flight_t = dt;
    return false;
  }
  s.drone.energy = std::max(0.0, s.drone.energy - need);
  s.drone.position = to;
  s.ledger.flight += f;
  s.drone_clock += f;
  trace.flight_t = f;
  return true;
}

void finish_trace(const EnvState& before, Transition& t) {
  t.outcome.elapsed = t.state.drone_clock - before.drone_clock;
  t.outcome.energy_delta = t.state.drone.energy - before.drone.energy;
  t.outcome.trace.stage = t.state.stage_count;
  t.outcome.trace.kase = t.outcome.kase;
  t.outcome.trace.from = before.drone.position;
  t.outcome.trace.to = t.state.drone.position;
  t.outcome.trace.energy_after = t.state.drone.energy;
}

}  // namespace

Transition apply_observe(const EnvState& s, const DeploymentSpec& spec, double tau, int charger_dest) {
  require_running(s, "apply_observe");
  require_charge_point(spec, charger_dest, "apply_observe");
  Transition t{s, {}};
  EnvState& ns = t.state;
  TraceEntry& trace = t.outcome.trace;
  const double stage_start = s.drone_clock;
  ns.stage_count += 1;

  const std::size_t i = s.next_poi;
  if (i >= spec.n()) {
    // After p_n the observe action means "return to the depot"; the charger
    // heads home as well.
    move_charger(ns, spec, 0, stage_start);
    if (fly(ns, spec.depot(), trace)) {
      ns.terminal = Terminal::completed;
      t.outcome.kase = StageCase::end;
    } else {
      ns.terminal = Terminal::failed;
      t.outcome.kase = StageCase::fail;
    }
    finish_trace(s, t);
    return t;
  }

  const PoISpec& poi = spec.pois[i];
  if (!std::isfinite(tau) || tau < poi.tau_min - 1e-9 || tau > poi.tau_max + 1e-9) {
    throw ContractViolation("apply_observe: tau outside [tau_min, tau_max] of the next PoI");
  }
  move_charger(ns, spec, charger_dest, stage_start);
  if (!fly(ns, poi.position, trace)) {
    ns.terminal = Terminal::failed;
    t.outcome.kase = StageCase::fail;
    finish_trace(s, t);
    return t;
  }
  const double obs_energy = ns.drone.gamma_o * tau;
  if (obs_energy > ns.drone.energy + kEnergyTolerance) {
    const double dt = ns.drone.energy / ns.drone.gamma_o;
    ns.ledger.observing += dt;
    ns.drone_clock += dt;
    ns.drone.energy = 0.0;
    trace.observe_t = dt;
    ns.terminal = Terminal::failed;
    t.outcome.kase = StageCase::fail;
    finish_trace(s, t);
    return t;
  }
  ns.drone.energy = std::max(0.0, ns.drone.energy - obs_energy);
  ns.ledger.observing += tau;
  ns.drone_clock += tau;
  ns.assigned_tau[i] = tau;
  ns.next_poi = i + 1;
  if (ns.next_poi == spec.n()) ns.clock_at_last_poi = ns.drone_clock;
  trace.observe_t = tau;
  t.outcome.kase = StageCase::obs;
  finish_trace(s, t);
  return t;
}

Transition apply_charge(const EnvState& s, const DeploymentSpec& spec, int c_k, double tau_tilde) {
  require_running(s, "apply_charge");
  require_charge_point(spec, c_k, "apply_charge");
  if (!(tau_tilde >= 0.0)) throw ContractViolation("apply_charge: negative or NaN charging time");

  const Point2D target = spec.charge_points[static_cast<std::size_t>(c_k)].position;
  const double f = travel_time(s.drone.position, target, s.drone.speed);
  if (s.drone.gamma_f * f > s.drone.energy + kEnergyTolerance) {
    throw ContractViolation("apply_charge: charging point not reachable with current energy");
  }

  Transition t{s, {}};
  EnvState& ns = t.state;
  TraceEntry& trace = t.outcome.trace;
  const double stage_start = s.drone_clock;
  ns.stage_count += 1;

  fly(ns, target, trace);
  const double drone_arrival = ns.drone_clock;
  const double charger_arrival =
      std::max(s.charger.clock, stage_start) + travel_time(s.charger.position, target, s.charger.speed);
  const double wait = std::max(0.0, charger_arrival - drone_arrival);
  ns.charger_idle += std::max(0.0, drone_arrival - charger_arrival);

  const double e_k = ns.drone.energy;
  const double headroom = std::max(0.0, (ns.drone.capacity - e_k) / ns.charger.gamma_c);
  const double tau_eff = std::min(tau_tilde, headroom);
  ns.drone.energy = std::min(ns.drone.capacity, e_k + ns.charger.gamma_c * tau_eff);

  ns.ledger.wait += wait;
  ns.ledger.charging += tau_eff;
  ns.drone_clock += wait + tau_eff;
  ns.charger.position = target;
  ns.charger.clock = ns.drone_clock;
  ns.charge_records[static_cast<std::size_t>(c_k)] = tau_eff;

  trace.wait_t = wait;
  trace.charge_t = tau_eff;
  t.outcome.kase = StageCase::chg;
  finish_trace(s, t);
  return t;
}

Transition apply_action(const EnvState& s, const DeploymentSpec& spec, const JointAction& action) {
  if (action.a == 1) return apply_observe(s, spec, action.tau, action.a_tilde);
  if (action.a == 0) return apply_charge(s, spec, action.a_tilde, action.tau_tilde);
  throw ContractViolation("apply_action: drone action must be 0 or 1");
}

Transition abort_episode(const EnvState& s) {
  require_running(s, "abort_episode");
  Transition t{s, {}};
  t.state.terminal = Terminal::failed;
  t.outcome.kase = StageCase::fail;
  finish_trace(s, t);
  return t;
}

double utility_nu(double tau, double tau_min, double tau_max) {
  if (tau < tau_min) return 0.0;
  return std::min(tau / tau_max, 1.0);
}

double importance_zeta(std::size_t i, const DeploymentSpec& spec) {
  if (i >= spec.n()) throw ContractViolation("importance_zeta: PoI index out of range");
  double total = 0.0;
  for (const auto& p : spec.pois) total += p.tau_max;
  return spec.pois[i].tau_max / total;
}

double utility_sum(const EnvState& s, const DeploymentSpec& spec) {
  double total_tau_max = 0.0;
  for (const auto& p : spec.pois) total_tau_max += p.tau_max;
  double u = 0.0;
  for (std::size_t i = 0; i < s.next_poi && i < spec.n(); ++i) {
    const auto& p = spec.pois[i];
    u += (p.tau_max / total_tau_max) * utility_nu(s.assigned_tau[i], p.tau_min, p.tau_max);
  }
  return u;
}

double makespan(const EnvState& s) { return s.drone_clock; }

double objective(const EnvState& s, const DeploymentSpec& spec) {
  if (s.terminal != Terminal::completed) throw ContractViolation("objective: episode has not completed");
  return utility_sum(s, spec) / makespan(s);
}

std::size_t state_dim(std::size_t n, std::size_t m) { return 10 + 5 * n + 3 * m + 1; }

std::vector<float> encode_state(const EnvState& s, const DeploymentSpec& spec) {
  std::vector<float> v;
  v.reserve(state_dim(spec.n(), spec.m()));
  auto put = [&v](double x) { v.push_back(static_cast<float>(x)); };
  const auto& d = s.drone;
  put(d.position.x / 1000.0);
  put(d.position.y / 1000.0);
  put(d.speed / 25.0);
  put(d.gamma_f);
  put(d.gamma_o);
  put(d.energy / d.capacity);
  const auto& c = s.charger;
  put(c.position.x / 1000.0);
  put(c.position.y / 1000.0);
  put(c.speed / 10.0);
  put(c.gamma_c);
  for (std::size_t i = 0; i < spec.n(); ++i) {
    const auto& p = spec.pois[i];
    put(p.position.x / 1000.0);
    put(p.position.y / 1000.0);
    put(p.tau_min / 10.0);
    put(p.tau_max / 10.0);
    put(s.assigned_tau[i] / 10.0);
  }
  for (std::size_t j = 0; j < spec.m(); ++j) {
    put(spec.charge_points[j].position.x / 1000.0);
    put(spec.charge_points[j].position.y / 1000.0);
    put(s.charge_records[j] / 10.0);
  }
  put(static_cast<double>(s.next_poi) / static_cast<double>(spec.n()));
  return v;
}

}  // namespace hadmc
