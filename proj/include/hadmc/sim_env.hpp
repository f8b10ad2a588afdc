#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hadmc/scenario.hpp"

namespace hadmc {

struct DroneState {
  Point2D position;
  double speed = 0.0;
  double gamma_f = 0.0;
  double gamma_o = 0.0;
  double energy = 0.0;
  double capacity = 0.0;

  bool operator==(const DroneState&) const = default;
};

struct ChargerState {
  Point2D position;
  double speed = 0.0;
  double gamma_c = 0.0;
  double clock = 0.0;  // time at which the charger is free at `position`

  bool operator==(const ChargerState&) const = default;
};

/// Drone-side time split. Charger idling is not part of the drone's clock.
struct TimeLedger {
  double flight = 0.0;
  double observing = 0.0;
  double charging = 0.0;
  double wait = 0.0;

  double total() const { return flight + observing + charging + wait; }
  bool operator==(const TimeLedger&) const = default;
};

enum class Terminal { running, failed, completed };
enum class StageCase { obs, chg, fail, end };

std::string to_string(Terminal t);
std::string to_string(StageCase c);

struct EnvState {
  DroneState drone;
  ChargerState charger;
  std::vector<double> assigned_tau;    // per PoI, 0 until observed
  std::vector<double> charge_records;  // per charging point, last effective charge duration
  std::size_t next_poi = 0;            // number of PoIs observed so far
  double drone_clock = 0.0;
  double clock_at_last_poi = 0.0;      // drone clock when p_n's observation ended
  TimeLedger ledger;
  double charger_idle = 0.0;           // charger waiting for the drone at rendezvous
  int stage_count = 0;
  Terminal terminal = Terminal::running;

  bool operator==(const EnvState&) const = default;
};

/// A decoded hybrid action for one stage.
struct JointAction {
  int a = 1;               // 1: observe next PoI (or return to depot after p_n); 0: rendezvous
  double tau = 0.0;        // observation time when a == 1
  int a_tilde = 0;         // charger destination
  double tau_tilde = 0.0;  // charging time when a == 0
  int a_dis = 0;           // m * a + a_tilde
  double a_con = 0.0;      // normalized continuous action in [-1, 1]
};

struct TraceEntry {
  int stage = 0;
  StageCase kase = StageCase::obs;
  Point2D from;
  Point2D to;
  double flight_t = 0.0;
  double observe_t = 0.0;
  double charge_t = 0.0;
  double wait_t = 0.0;
  double energy_after = 0.0;
  double reward = 0.0;
};

struct StageOutcome {
  StageCase kase = StageCase::obs;
  double reward = 0.0;        // filled by the reward engine
  double elapsed = 0.0;       // drone clock advance
  double energy_delta = 0.0;  // energy after minus energy before
  TraceEntry trace;
};

struct Transition {
  EnvState state;
  StageOutcome outcome;
};

EnvState reset(const DeploymentSpec& spec);

/// Indices j with gamma_f * t(drone, c_j) <= energy, ascending.
std::vector<int> reachable_chargers(const EnvState& s, const DeploymentSpec& spec);

/// Drone flies to the next PoI and observes for `tau` (or, after the last
/// PoI, flies home with tau forced to 0) while the charger heads for
/// `charger_dest`.
Transition apply_observe(const EnvState& s, const DeploymentSpec& spec, double tau, int charger_dest);

/// Drone and charger rendezvous at `c_k`; the charge is clamped so energy
/// never exceeds capacity.
Transition apply_charge(const EnvState& s, const DeploymentSpec& spec, int c_k, double tau_tilde);

/// Dispatches on `action.a`.
Transition apply_action(const EnvState& s, const DeploymentSpec& spec, const JointAction& action);

/// Marks a running state as failed without moving (stage budget exhausted).
Transition abort_episode(const EnvState& s);

double utility_nu(double tau, double tau_min, double tau_max);
double importance_zeta(std::size_t i, const DeploymentSpec& spec);
double utility_sum(const EnvState& s, const DeploymentSpec& spec);
double makespan(const EnvState& s);
double objective(const EnvState& s, const DeploymentSpec& spec);

std::size_t state_dim(std::size_t n, std::size_t m);
std::vector<float> encode_state(const EnvState& s, const DeploymentSpec& spec);

inline constexpr double kTimeEpsilon = 1e-6;
inline constexpr double kEnergyTolerance = 1e-9;

}  // namespace hadmc
