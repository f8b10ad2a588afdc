#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hadmc {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2D&) const = default;
};

double distance(Point2D a, Point2D b);

/// Straight-line travel time between two points at constant speed.
double travel_time(Point2D a, Point2D b, double speed);

struct PoISpec {
  Point2D position;
  double tau_min = 4.0;
  double tau_max = 8.0;

  bool operator==(const PoISpec&) const = default;
};

struct ChargePointSpec {
  Point2D position;
  bool is_depot = false;

  bool operator==(const ChargePointSpec&) const = default;
};

struct SystemParams {
  double drone_speed = 25.0;
  double charger_speed = 10.0;
  double energy_capacity = 60.0;
  double gamma_f = 1.0;  // energy per unit flight time
  double gamma_o = 1.0;  // energy per unit observation time
  double gamma_c = 6.0;  // energy per unit charging time

  bool operator==(const SystemParams&) const = default;

  /// Throws ContractViolation unless every rate is positive and
  /// gamma_c > gamma_f.
  void validate() const;
};

enum class DeploymentType { A, R };

std::string to_string(DeploymentType type);
DeploymentType deployment_type_from_string(const std::string& s);

/// A complete world: PoIs in mandatory visiting order, charging points with
/// the depot at index 0, and the physical rates.
struct DeploymentSpec {
  std::vector<PoISpec> pois;
  std::vector<ChargePointSpec> charge_points;
  SystemParams params;
  std::string scenario_tag = "custom";
  std::int64_t rng_seed = 0;

  bool operator==(const DeploymentSpec&) const = default;

  std::size_t n() const { return pois.size(); }
  std::size_t m() const { return charge_points.size(); }
  const Point2D& depot() const { return charge_points.front().position; }

  void validate() const;
};

struct GenerationOptions {
  double square_side = 1000.0;
  double min_separation = 100.0;  // pairwise PoI distance floor
  double near_radius = 50.0;      // Type-A charger-to-PoI radius
  double tau_min = 4.0;
  std::vector<double> tau_max_choices{6.0, 7.0, 8.0};
  long max_attempts = 100000;
};

/// Samples a Type-A or Type-R deployment. PoIs are returned in clockwise
/// visiting order starting near the depot. Deterministic given `seed`.
DeploymentSpec generate_deployment(DeploymentType type, int n, int m, const SystemParams& params,
                                   std::int64_t seed, const GenerationOptions& options = {});

/// Orders PoIs clockwise about their centroid, starting with the PoI whose
/// polar angle is closest to the depot's. Ties keep input order.
std::vector<PoISpec> clockwise_order(const std::vector<PoISpec>& pois, Point2D depot);

/// (n, m) for scenario index k in 1..4, i.e. (10k, 4k).
std::pair<int, int> scenario_size(int k);

/// "SA3", "SR1", ... for matching (type, n, m); "custom" otherwise.
std::string scenario_tag_for(DeploymentType type, int n, int m);

inline constexpr int kDeploymentSchemaVersion = 1;

nlohmann::json deployment_to_json(const DeploymentSpec& spec);

/// Strict parse: unknown keys, missing keys, wrong types, schema-version
/// mismatch and invariant violations all raise ParseError naming the field.
DeploymentSpec deployment_from_json(const nlohmann::json& doc);

void save_deployment(const DeploymentSpec& spec, const std::filesystem::path& path);
DeploymentSpec load_deployment(const std::filesystem::path& path);

}  // namespace hadmc
