#include "fleetopt/agent/history.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fleetopt/data/ingest.hpp"

namespace fleetopt::agent {

std::vector<std::string> decision_variable_names(std::size_t I, std::size_t J, std::size_t K) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k) names.push_back(x_name(i, j, k));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k) names.push_back(u_hat_name(j, k));
  return names;
}

double decision_value(const Decision& decision, std::size_t v) {
  if (v < decision.x.size()) return decision.x[v];
  return decision.u_hat.data().at(v - decision.x.size());
}

void HistoryStore::finalize() {
  if (records.empty()) throw std::invalid_argument("history: no records");
  const FleetInstance& first = records.front().instance;
  const std::size_t I = first.num_supply(), J = first.num_demand(), K = first.num_soc();
  for (const HistoryRecord& r : records) {
    if (r.instance.num_supply() != I || r.instance.num_demand() != J || r.instance.num_soc() != K)
      throw std::invalid_argument("history: records have different dimensions");
    if (!check_feasible(r.instance, r.decision).empty())
      throw std::invalid_argument("history: decision of " + data::format_date(r.day) + " is infeasible");
  }
  const std::vector<std::string> names = decision_variable_names(I, J, K);
  const double n = static_cast<double>(records.size());
  stats.clear();
  for (std::size_t v = 0; v < names.size(); ++v) {
    VariableStats s;
    s.name = names[v];
    s.integer = v < I * J * K;
    s.min = s.max = decision_value(records.front().decision, v);
    double sum = 0.0;
    for (const HistoryRecord& r : records) {
      const double y = decision_value(r.decision, v);
      sum += y;
      s.min = std::min(s.min, y);
      s.max = std::max(s.max, y);
    }
    s.mean = sum / n;
    double ss = 0.0;
    for (const HistoryRecord& r : records) {
      const double dev = decision_value(r.decision, v) - s.mean;
      ss += dev * dev;
    }
    s.stddev = std::sqrt(ss / n);
    stats.push_back(std::move(s));
  }
}

std::optional<std::size_t> HistoryStore::index_of(const std::string& name) const {
  for (std::size_t v = 0; v < stats.size(); ++v)
    if (stats[v].name == name) return v;
  return std::nullopt;
}

Decision baseline_decision(const HistoryStore& history, const FleetInstance& instance) {
  Decision d(instance);
  const std::size_t nx = d.x.size();
  if (history.stats.size() != nx + d.u_hat.data().size())
    throw std::invalid_argument("baseline_decision: history does not match the instance");
  for (std::size_t i = 0; i < d.num_supply; ++i)
    for (std::size_t k = 0; k < d.num_soc; ++k) {
      const int cap = instance.supply(i, k);
      int total = 0;
      for (std::size_t j = 0; j < d.num_demand; ++j) {
        const double m = history.stats[d.index(i, j, k)].mean;
        d.alloc(i, j, k) = std::clamp(static_cast<int>(std::floor(m + 0.5)), 0, cap);
        total += d.alloc(i, j, k);
      }
      while (total > cap) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < d.num_demand; ++j)
          if (d.alloc(i, j, k) > d.alloc(i, best, k)) best = j;
        --d.alloc(i, best, k);
        --total;
      }
    }
  for (std::size_t c = 0; c < d.u_hat.data().size(); ++c)
    d.u_hat.data()[c] = std::clamp(history.stats[nx + c].mean, instance.fare_min, instance.fare_max);
  return d;
}

nlohmann::json history_to_json(const HistoryStore& h) {
  nlohmann::json records = nlohmann::json::array();
  for (const HistoryRecord& r : h.records)
    records.push_back({{"date", data::format_date(r.day)},
                       {"exogenous", r.exogenous},
                       {"instance", instance_to_json(r.instance)},
                       {"decision", decision_to_json(r.decision)},
                       {"objective", r.objective}});
  nlohmann::json stats = nlohmann::json::array();
  for (const VariableStats& s : h.stats)
    stats.push_back({{"name", s.name},
                     {"integer", s.integer},
                     {"mean", s.mean},
                     {"stddev", s.stddev},
                     {"min", s.min},
                     {"max", s.max}});
  return {{"schema", "fleetopt.history/1"}, {"records", records}, {"stats", stats}};
}

HistoryStore history_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("schema", "") != "fleetopt.history/1")
      throw FormatError("history: missing or unsupported schema tag");
    HistoryStore h;
    for (const auto& r : doc.at("records")) {
      HistoryRecord rec;
      rec.day = data::parse_date(r.at("date").get<std::string>());
      rec.exogenous = r.at("exogenous").get<std::vector<double>>();
      rec.instance = instance_from_json(r.at("instance"));
      rec.decision = decision_from_json(r.at("decision"), rec.instance);
      rec.objective = r.at("objective").get<double>();
      h.records.push_back(std::move(rec));
    }
    h.finalize();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("history: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("history: ") + e.what());
  }
}

}  // namespace fleetopt::agent
