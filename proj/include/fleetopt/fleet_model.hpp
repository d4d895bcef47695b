#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fleetopt/common.hpp"
#include "fleetopt/mip/problem.hpp"

namespace fleetopt {

/// One decision epoch of the pre-allocation and pricing problem.
///
/// Supply areas I and demand areas J are disjoint id lists; SOC levels are
/// indexed 0 (lowest) to soc_levels - 1 (highest). A request at level k can
/// be served by a taxi at level k or above.
struct FleetInstance {
  std::vector<int> supply_areas;
  std::vector<int> demand_areas;
  int soc_levels = 3;
  Matrix<int> supply;          // S[i,k]
  Matrix<int> demand;          // z[j,k]
  Matrix<double> distance_km;  // [i,j]
  double inconvenience_rate = 0.5;
  std::vector<double> booking_fee;  // b[j]
  double theta = 0.2;
  double fare_min = 1.0;
  double fare_max = 50.0;

  std::size_t num_supply() const { return supply_areas.size(); }
  std::size_t num_demand() const { return demand_areas.size(); }
  std::size_t num_soc() const { return static_cast<std::size_t>(soc_levels); }

  /// w[i,j] = inconvenience_rate * distance + b[j].
  double cost(std::size_t i, std::size_t j) const { return inconvenience_rate * distance_km(i, j) + booking_fee[j]; }
  /// u[j,k] = theta * u_hat + b[j].
  double revenue_per_trip(std::size_t j, double u_hat) const { return theta * u_hat + booking_fee[j]; }

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Convenience constructor filling the default parameters.
FleetInstance make_instance(std::vector<int> supply_areas, std::vector<int> demand_areas, Matrix<int> supply,
                            Matrix<int> demand, Matrix<double> distance_km);

struct Decision {
  Decision() = default;
  /// All-zero allocation with every fare at fare_min.
  explicit Decision(const FleetInstance& instance);

  std::size_t num_supply = 0, num_demand = 0, num_soc = 0;
  std::vector<int> x;  // flattened i-major, then j, then k
  Matrix<double> u_hat;

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * num_demand + j) * num_soc + k; }
  int& alloc(std::size_t i, std::size_t j, std::size_t k) { return x[index(i, j, k)]; }
  int alloc(std::size_t i, std::size_t j, std::size_t k) const { return x[index(i, j, k)]; }

  bool operator==(const Decision&) const = default;
};

struct FulfillmentState {
  Matrix<int> d;  // satisfied demand [j,k]
  Matrix<int> v;  // surplus passed down from level k [j,k]
  bool operator==(const FulfillmentState&) const = default;
};

/// Top-down cascade: level k receives its own inflow plus the surplus of
/// level k + 1. Throws std::invalid_argument on dimension mismatch or
/// negative allocations.
FulfillmentState cascade_fulfill(const FleetInstance& instance, const Decision& decision);

/// Revenue of fulfilled trips minus repositioning cost. Throws
/// std::invalid_argument if `fulfillment` is not the cascade of `decision`.
double profit(const FleetInstance& instance, const Decision& decision, const FulfillmentState& fulfillment);
double profit(const FleetInstance& instance, const Decision& decision);

struct Violation {
  std::string constraint;    // "dimension", "supply", "nonnegativity", "fare_lower", "fare_upper"
  std::vector<int> indices;
  double slack = 0.0;        // negative when violated
};

std::vector<Violation> check_feasible(const FleetInstance& instance, const Decision& decision);

/// Candidate fares per (j,k), each list ascending within the fare bounds.
struct PriceGrid {
  std::size_t num_demand = 0, num_soc = 0;
  std::vector<std::vector<double>> points;

  const std::vector<double>& at(std::size_t j, std::size_t k) const { return points[j * num_soc + k]; }
  void validate(const FleetInstance& instance) const;
};

/// `n` evenly spaced fares from fare_min to fare_max; n = 1 gives the midpoint.
PriceGrid uniform_price_grid(const FleetInstance& instance, int n = 8);

/// The exact cascade MIP with grid prices and its index maps.
struct DeterministicMip {
  mip::MipProblem problem;
  std::vector<int> x;                  // Decision::index order
  std::vector<int> d, v, delta;        // j * K + k
  std::vector<std::vector<int>> rho;   // [j * K + k][p]
  std::vector<std::vector<int>> prod;  // rho * d auxiliaries, same shape
  PriceGrid grid;
};

DeterministicMip build_deterministic_mip(const FleetInstance& instance, const PriceGrid& grid);

/// Reads x and the selected grid fares out of a solution vector.
Decision decision_from_solution(const FleetInstance& instance, const DeterministicMip& model,
                                const std::vector<double>& values);

std::string x_name(std::size_t i, std::size_t j, std::size_t k);
std::string u_hat_name(std::size_t j, std::size_t k);

nlohmann::json instance_to_json(const FleetInstance& instance);
/// Throws FormatError on schema violations.
FleetInstance instance_from_json(const nlohmann::json& doc);

nlohmann::json decision_to_json(const Decision& decision);
Decision decision_from_json(const nlohmann::json& doc, const FleetInstance& instance);

}  // namespace fleetopt
