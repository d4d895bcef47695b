#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetopt/fleet_model.hpp"

namespace fleetopt::agent {

struct HistoryRecord {
  std::int64_t day = 0;
  FleetInstance instance;
  std::vector<double> exogenous;
  Decision decision;   // optimum of the forest model for that day
  double objective = 0.0;
};

struct VariableStats {
  std::string name;
  bool integer = true;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

/// Names of the decision variables in feature order: every x[i,j,k] in
/// Decision::index order, then every u_hat[j,k].
std::vector<std::string> decision_variable_names(std::size_t I, std::size_t J, std::size_t K);

/// Value of variable `v` (feature order) in a decision.
double decision_value(const Decision& decision, std::size_t v);

struct HistoryStore {
  std::vector<HistoryRecord> records;
  std::vector<VariableStats> stats;  // feature order

  /// Recomputes `stats` from `records`. Throws std::invalid_argument when
  /// empty, shapes differ, or a decision is infeasible for its instance.
  void finalize();
  std::optional<std::size_t> index_of(const std::string& name) const;
};

/// Every variable at its historical mean, integers rounded half-up and
/// clamped into [0, S[i,k]]; rows whose sum exceeds S[i,k] are then reduced
/// one unit at a time at the largest entry (ties to the lowest j). Fares
/// are clamped to the fare bounds.
Decision baseline_decision(const HistoryStore& history, const FleetInstance& instance);

nlohmann::json history_to_json(const HistoryStore& history);
/// Throws FormatError.
HistoryStore history_from_json(const nlohmann::json& doc);

}  // namespace fleetopt::agent
