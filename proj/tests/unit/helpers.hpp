#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hadmc/action_codec.hpp"
#include "hadmc/scenario.hpp"
#include "hadmc/sim_env.hpp"

namespace hadmc::testing {

// Hand-placed world: depot first, then the listed charging points.
inline DeploymentSpec make_spec(std::vector<Point2D> pois, std::vector<Point2D> chargers, double tau_min = 4.0,
                                double tau_max = 6.0) {
  DeploymentSpec s;
  for (auto p : pois) s.pois.push_back({p, tau_min, tau_max});
  bool first = true;
  for (auto c : chargers) {
    s.charge_points.push_back({c, first});
    first = false;
  }
  return s;
}

inline bool rel_close(double a, double b, double tol) {
  const double scale = std::max({1e-8, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale < tol;
}

// Uniform feasible discrete slot with a uniform normalized duration.
inline JointAction random_action(const EnvState& s, const DeploymentSpec& spec, std::mt19937_64& rng) {
  const auto feasible = feasible_discrete(s, spec);
  std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int a_dis = feasible[pick(rng)];
  return physical_times(a_dis, u(rng), s, spec);
}

}  // namespace hadmc::testing
