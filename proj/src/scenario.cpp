#include "hadmc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "hadmc/errors.hpp"
#include "hadmc/serialize.hpp"

namespace hadmc {

double distance(Point2D a, Point2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

double travel_time(Point2D a, Point2D b, double speed) {
  if (!(speed > 0.0)) throw ContractViolation("travel_time: speed must be positive");
  return distance(a, b) / speed;
}

void SystemParams::validate() const {
  const double rates[] = {drone_speed, charger_speed, energy_capacity, gamma_f, gamma_o, gamma_c};
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ContractViolation("SystemParams: all rates must be positive and finite");
  }
  if (!(gamma_c > gamma_f)) throw ContractViolation("SystemParams: gamma_c must exceed gamma_f");
}

std::string to_string(DeploymentType type) { return type == DeploymentType::A ? "A" : "R"; }

DeploymentType deployment_type_from_string(const std::string& s) {
  if (s == "A" || s == "a") return DeploymentType::A;
  if (s == "R" || s == "r") return DeploymentType::R;
  throw ParseError("", "deployment type must be \"A\" or \"R\", got \"" + s + "\"");
}

void DeploymentSpec::validate() const {
  if (pois.empty()) throw ContractViolation("deployment needs at least one PoI");
  if (charge_points.empty()) throw ContractViolation("deployment needs at least one charging point");
  params.validate();
  for (std::size_t j = 0; j < charge_points.size(); ++j) {
    if (charge_points[j].is_depot != (j == 0)) {
      throw ContractViolation("exactly one depot, at charging point index 0");
    }
  }
  for (const auto& p : pois) {
    if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y)) throw ContractViolation("non-finite PoI position");
    if (!(p.tau_min > 0.0) || p.tau_max < p.tau_min) throw ContractViolation("PoI needs 0 < tau_min <= tau_max");
  }
}

namespace {

Point2D uniform_point(std::mt19937_64& rng, double side) {
  std::uniform_real_distribution<double> u(0.0, side);
  const double x = u(rng);
  const double y = u(rng);
  return {x, y};
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0.0) a += two_pi;
  return a;
}

}  // namespace

std::vector<PoISpec> clockwise_order(const std::vector<PoISpec>& pois, Point2D depot) {
  if (pois.size() <= 1) return pois;
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pois) {
    cx += p.position.x;
    cy += p.position.y;
  }
  cx /= static_cast<double>(pois.size());
  cy /= static_cast<double>(pois.size());

  std::vector<double> angle(pois.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    angle[i] = std::atan2(pois[i].position.y - cy, pois[i].position.x - cx);
  }
  const double depot_angle = std::atan2(depot.y - cy, depot.x - cx);

  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pois.size(); ++i) {
    const double d = wrap_angle(angle[i] - depot_angle);
    const double gap = std::min(d, 2.0 * std::numbers::pi - d);
    if (gap < best) {
      best = gap;
      start = i;
    }
  }

  // Clockwise = decreasing polar angle, measured as the offset from start.
  std::vector<double> offset(pois.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    offset[i] = angle[i] == angle[start] ? 0.0 : wrap_angle(angle[start] - angle[i]);
  }
  std::vector<std::size_t> idx(pois.size());
  std::iota(idx.begin(), idx.end(), 0);
  // The start leads any PoIs sharing its angle; other ties keep input order.
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (offset[a] != offset[b]) return offset[a] < offset[b];
    return a == start && b != start;
  });

  std::vector<PoISpec> out;
  out.reserve(pois.size());
  for (std::size_t i : idx) out.push_back(pois[i]);
  return out;
}

std::pair<int, int> scenario_size(int k) {
  if (k < 1 || k > 4) throw ContractViolation("scenario index must be in 1..4");
  return {10 * k, 4 * k};
}

std::string scenario_tag_for(DeploymentType type, int n, int m) {
  for (int k = 1; k <= 4; ++k) {
    if (scenario_size(k) == std::make_pair(n, m)) {
      return std::string(type == DeploymentType::A ? "SA" : "SR") + std::to_string(k);
    }
  }
  return "custom";
}

DeploymentSpec generate_deployment(DeploymentType type, int n, int m, const SystemParams& params,
                                   std::int64_t seed, const GenerationOptions& options) {
  if (n < 1 || m < 1) throw ContractViolation("generate_deployment: need n >= 1 and m >= 1");
  if (options.tau_max_choices.empty()) throw ContractViolation("generate_deployment: no tau_max choices");
  params.validate();

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  const double side = options.square_side;
  const double sep2 = options.min_separation * options.min_separation;

  std::vector<PoISpec> pois;
  pois.reserve(static_cast<std::size_t>(n));
  long attempts = 0;
  while (static_cast<int>(pois.size()) < n) {
    if (++attempts > options.max_attempts) {
      throw GenerationError("could not place " + std::to_string(n) + " PoIs with separation " +
                            std::to_string(options.min_separation) + " after " +
                            std::to_string(options.max_attempts) + " attempts");
    }
    const Point2D p = uniform_point(rng, side);
    const bool ok = std::all_of(pois.begin(), pois.end(), [&](const PoISpec& q) {
      const double dx = q.position.x - p.x, dy = q.position.y - p.y;
      return dx * dx + dy * dy >= sep2;
    });
    if (ok) pois.push_back({p, options.tau_min, 0.0});
  }
  std::uniform_int_distribution<std::size_t> pick_tau(0, options.tau_max_choices.size() - 1);
  for (auto& p : pois) p.tau_max = options.tau_max_choices[pick_tau(rng)];

  DeploymentSpec spec;
  spec.params = params;
  spec.rng_seed = seed;
  spec.scenario_tag = scenario_tag_for(type, n, m);
  spec.charge_points.push_back({uniform_point(rng, side), true});

  std::uniform_int_distribution<std::size_t> pick_poi(0, pois.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 1; j < m; ++j) {
    if (type == DeploymentType::R) {
      spec.charge_points.push_back({uniform_point(rng, side), false});
      continue;
    }
    for (long tries = 0;; ++tries) {
      if (tries > options.max_attempts) throw GenerationError("could not place a Type-A charging point inside the square");
      const Point2D anchor = pois[pick_poi(rng)].position;
      const double r = options.near_radius * std::sqrt(unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      const Point2D c{anchor.x + r * std::cos(theta), anchor.y + r * std::sin(theta)};
      if (c.x >= 0.0 && c.x <= side && c.y >= 0.0 && c.y <= side) {
        spec.charge_points.push_back({c, false});
        break;
      }
    }
  }
  spec.pois = clockwise_order(pois, spec.depot());
  return spec;
}

nlohmann::json deployment_to_json(const DeploymentSpec& spec) {
  nlohmann::json doc;
  doc["schema_version"] = kDeploymentSchemaVersion;
  doc["scenario_tag"] = spec.scenario_tag;
  doc["seed"] = spec.rng_seed;
  doc["params"] = {
      {"drone_speed", spec.params.drone_speed},   {"charger_speed", spec.params.charger_speed},
      {"energy_capacity", spec.params.energy_capacity}, {"gamma_f", spec.params.gamma_f},
      {"gamma_o", spec.params.gamma_o},           {"gamma_c", spec.params.gamma_c},
  };
  auto& pois = doc["pois"] = nlohmann::json::array();
  for (const auto& p : spec.pois) {
    pois.push_back({{"x", p.position.x}, {"y", p.position.y}, {"tau_min", p.tau_min}, {"tau_max", p.tau_max}});
  }
  auto& cps = doc["charge_points"] = nlohmann::json::array();
  for (const auto& c : spec.charge_points) {
    cps.push_back({{"x", c.position.x}, {"y", c.position.y}, {"is_depot", c.is_depot}});
  }
  return doc;
}

DeploymentSpec deployment_from_json(const nlohmann::json& doc) {
  io::ObjectReader root(doc, "");
  const long version = root.integer("schema_version");
  if (version != kDeploymentSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                           std::to_string(kDeploymentSchemaVersion) + ")");
  }
  DeploymentSpec spec;
  spec.scenario_tag = root.string("scenario_tag");
  spec.rng_seed = root.integer("seed");

  io::ObjectReader params(root.at("params"), "params");
  spec.params.drone_speed = params.number("drone_speed");
  spec.params.charger_speed = params.number("charger_speed");
  spec.params.energy_capacity = params.number("energy_capacity");
  spec.params.gamma_f = params.number("gamma_f");
  spec.params.gamma_o = params.number("gamma_o");
  spec.params.gamma_c = params.number("gamma_c");
  params.finish();

  const auto& pois = root.at("pois");
  if (!pois.is_array()) throw ParseError("pois", "expected an array");
  for (std::size_t i = 0; i < pois.size(); ++i) {
    io::ObjectReader r(pois[i], "pois[" + std::to_string(i) + "]");
    PoISpec p;
    p.position = {r.number("x"), r.number("y")};
    p.tau_min = r.number("tau_min");
    p.tau_max = r.number("tau_max");
    r.finish();
    if (!(p.tau_min > 0.0) || p.tau_max < p.tau_min) {
      throw ParseError(r.path(), "requires 0 < tau_min <= tau_max");
    }
    spec.pois.push_back(p);
  }

  const auto& cps = root.at("charge_points");
  if (!cps.is_array()) throw ParseError("charge_points", "expected an array");
  for (std::size_t j = 0; j < cps.size(); ++j) {
    io::ObjectReader r(cps[j], "charge_points[" + std::to_string(j) + "]");
    ChargePointSpec c;
    c.position = {r.number("x"), r.number("y")};
    c.is_depot = r.boolean("is_depot");
    r.finish();
    if (c.is_depot != (j == 0)) throw ParseError(r.path() + ".is_depot", "the depot must be exactly charge_points[0]");
    spec.charge_points.push_back(c);
  }
  root.finish();

  if (spec.pois.empty()) throw ParseError("pois", "at least one PoI required");
  if (spec.charge_points.empty()) throw ParseError("charge_points", "at least one charging point required (m >= 1)");
  try {
    spec.params.validate();
  } catch (const ContractViolation& e) {
    throw ParseError("params", e.what());
  }
  return spec;
}

void save_deployment(const DeploymentSpec& spec, const std::filesystem::path& path) {
  io::write_json_atomic(path, deployment_to_json(spec));
}

DeploymentSpec load_deployment(const std::filesystem::path& path) {
  return deployment_from_json(io::read_json(path));
}

}  // namespace hadmc
