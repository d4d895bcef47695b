#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetopt/data/ingest.hpp"
#include "fleetopt/forest.hpp"

namespace fleetopt::data {

struct SynthConfig {
  std::uint64_t seed = 2024;
  int num_supply = 8;
  int num_demand = 3;
  int num_soc = 3;
  Matrix<double> base_demand;  // [j,k]; empty selects the built-in table
  double elasticity = 0.8;
  double reference_fare = 20.0;
  double weather_slope = 0.01;  // per degree C above weather_pivot
  double weather_pivot = 15.0;
  double weather_min = 0.5;
  double weather_max = 1.5;
  int num_days = 120;
  std::string start_date = "2024-03-04";
  std::string peak_window = "08:00-08:30";
  int min_zone_supply = 2;  // taxis per supply zone per day
  int max_zone_supply = 6;
  double area_km = 8.0;
  double theta = 0.5;  // fare share kept per trip
  double fare_min = 5.0;
  double fare_max = 40.0;
  int samples_per_day = 20;  // labelled random decisions per day
  TrainConfig forest{20, 5, 30};

  void validate() const;
  /// base_demand, or the built-in table when empty.
  Matrix<double> demand_table() const;
  bool operator==(const SynthConfig&) const = default;
};

nlohmann::json synth_config_to_json(const SynthConfig& config);
/// Missing keys keep their defaults. Throws FormatError.
SynthConfig synth_config_from_json(const nlohmann::json& doc);

struct World {
  SynthConfig config;
  std::vector<std::pair<double, double>> zone_xy;  // km, supply zones then demand zones
  std::vector<DayInstance> days;
};

/// Same config, same world.
World generate_world(const SynthConfig& config);

/// 1 + slope * (temperature - pivot), clamped; temperature is exogenous[0].
double weather_factor(const SynthConfig& config, std::span<const double> exogenous);

/// round(base * weather * max(0, 1 - e * (u_hat - ref) / ref)) per (j,k).
Matrix<int> realized_demand(const SynthConfig& config, const FleetInstance& instance, const Decision& decision,
                            std::span<const double> exogenous);

/// Cascade profit against the realized demand. Throws std::invalid_argument
/// for infeasible decisions.
double simulate_profit(const FleetInstance& instance, const Decision& decision, std::span<const double> exogenous,
                       const SynthConfig& config);

/// Each taxi stays with probability 0.4 or moves to a uniform demand area;
/// fares uniform in the fare bounds.
Decision random_decision(const FleetInstance& instance, Rng& rng);

FeatureSchema world_schema(const World& world);

/// samples_per_day labelled random decisions per day.
Dataset training_data(const World& world);

nlohmann::json world_to_json(const World& world);
World world_from_json(const nlohmann::json& doc);

}  // namespace fleetopt::data
