#include "fleetopt/data/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetopt::data {

void SynthConfig::validate() const {
  if (num_supply < 1 || num_demand < 1 || num_soc < 1) throw std::invalid_argument("synth: sizes must be positive");
  if (!(elasticity >= 0.0)) throw std::invalid_argument("synth: elasticity must be non-negative");
  if (!(reference_fare > 0.0)) throw std::invalid_argument("synth: reference_fare must be positive");
  if (!(weather_min <= weather_max) || weather_min < 0.0) throw std::invalid_argument("synth: bad weather clamp");
  if (num_days < 1) throw std::invalid_argument("synth: num_days must be positive");
  if (min_zone_supply < 0 || min_zone_supply > max_zone_supply)
    throw std::invalid_argument("synth: bad zone supply range");
  if (!(area_km > 0.0)) throw std::invalid_argument("synth: area_km must be positive");
  if (!(theta >= 0.0)) throw std::invalid_argument("synth: theta must be non-negative");
  if (!(fare_min > 0.0 && fare_min <= fare_max)) throw std::invalid_argument("synth: bad fare bounds");
  if (samples_per_day < 1) throw std::invalid_argument("synth: samples_per_day must be positive");
  if (!base_demand.empty()) {
    if (base_demand.rows() != static_cast<std::size_t>(num_demand) || base_demand.cols() != static_cast<std::size_t>(num_soc))
      throw std::invalid_argument("synth: base_demand must be num_demand x num_soc");
    for (double v : base_demand.data())
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("synth: base_demand entries must be >= 0");
  }
  parse_date(start_date);
  parse_window(peak_window);
  forest.validate();
}

Matrix<double> SynthConfig::demand_table() const {
  if (!base_demand.empty()) return base_demand;
  Matrix<double> m(static_cast<std::size_t>(num_demand), static_cast<std::size_t>(num_soc));
  for (std::size_t j = 0; j < m.rows(); ++j)
    for (std::size_t k = 0; k < m.cols(); ++k) m(j, k) = 3.0 + static_cast<double>((2 * j + 3 * k) % 4);
  return m;
}

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  nlohmann::json base = nlohmann::json::array();
  for (std::size_t j = 0; j < c.base_demand.rows(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < c.base_demand.cols(); ++k) row.push_back(c.base_demand(j, k));
    base.push_back(std::move(row));
  }
  return {{"seed", c.seed},
          {"num_supply", c.num_supply},
          {"num_demand", c.num_demand},
          {"num_soc", c.num_soc},
          {"base_demand", base},
          {"elasticity", c.elasticity},
          {"reference_fare", c.reference_fare},
          {"weather_slope", c.weather_slope},
          {"weather_pivot", c.weather_pivot},
          {"weather_min", c.weather_min},
          {"weather_max", c.weather_max},
          {"num_days", c.num_days},
          {"start_date", c.start_date},
          {"peak_window", c.peak_window},
          {"min_zone_supply", c.min_zone_supply},
          {"max_zone_supply", c.max_zone_supply},
          {"area_km", c.area_km},
          {"theta", c.theta},
          {"fare_bounds", {c.fare_min, c.fare_max}},
          {"samples_per_day", c.samples_per_day},
          {"forest", train_config_to_json(c.forest)}};
}

SynthConfig synth_config_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw FormatError("synth config must be an object");
    SynthConfig c;
    c.seed = doc.value("seed", c.seed);
    c.num_supply = doc.value("num_supply", c.num_supply);
    c.num_demand = doc.value("num_demand", c.num_demand);
    c.num_soc = doc.value("num_soc", c.num_soc);
    if (doc.contains("base_demand") && !doc.at("base_demand").empty()) {
      const auto rows = doc.at("base_demand").get<std::vector<std::vector<double>>>();
      c.base_demand = Matrix<double>(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != c.base_demand.cols()) throw FormatError("base_demand rows differ in length");
        for (std::size_t k = 0; k < rows[j].size(); ++k) c.base_demand(j, k) = rows[j][k];
      }
    }
    c.elasticity = doc.value("elasticity", c.elasticity);
    c.reference_fare = doc.value("reference_fare", c.reference_fare);
    c.weather_slope = doc.value("weather_slope", c.weather_slope);
    c.weather_pivot = doc.value("weather_pivot", c.weather_pivot);
    c.weather_min = doc.value("weather_min", c.weather_min);
    c.weather_max = doc.value("weather_max", c.weather_max);
    c.num_days = doc.value("num_days", c.num_days);
    c.start_date = doc.value("start_date", c.start_date);
    c.peak_window = doc.value("peak_window", c.peak_window);
    c.min_zone_supply = doc.value("min_zone_supply", c.min_zone_supply);
    c.max_zone_supply = doc.value("max_zone_supply", c.max_zone_supply);
    c.area_km = doc.value("area_km", c.area_km);
    c.theta = doc.value("theta", c.theta);
    if (doc.contains("fare_bounds")) {
      const auto fb = doc.at("fare_bounds").get<std::vector<double>>();
      if (fb.size() != 2) throw FormatError("fare_bounds must have two entries");
      c.fare_min = fb[0];
      c.fare_max = fb[1];
    }
    c.samples_per_day = doc.value("samples_per_day", c.samples_per_day);
    if (doc.contains("forest")) c.forest = train_config_from_json(doc.at("forest"));
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("synth config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("synth config: ") + e.what());
  }
}

namespace {

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

World generate_world(const SynthConfig& config) {
  config.validate();
  World w;
  w.config = config;
  const auto I = static_cast<std::size_t>(config.num_supply), J = static_cast<std::size_t>(config.num_demand),
             K = static_cast<std::size_t>(config.num_soc);
  Rng zone_rng(derive_seed(config.seed, 0));
  for (std::size_t z = 0; z < I + J; ++z) {
    const double x = round_to(zone_rng.uniform(0.0, config.area_km), 0.01);
    const double y = round_to(zone_rng.uniform(0.0, config.area_km), 0.01);
    w.zone_xy.emplace_back(x, y);
  }
  Matrix<double> dist(I, J);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      const auto [xi, yi] = w.zone_xy[i];
      const auto [xj, yj] = w.zone_xy[I + j];
      dist(i, j) = round_to(std::hypot(xi - xj, yi - yj), 0.01);
    }
  std::vector<int> supply_ids(I), demand_ids(J);
  for (std::size_t i = 0; i < I; ++i) supply_ids[i] = static_cast<int>(i);
  for (std::size_t j = 0; j < J; ++j) demand_ids[j] = static_cast<int>(I + j);

  const Matrix<double> base = config.demand_table();
  const std::vector<double> soc_weights = K == 3 ? std::vector<double>{0.3, 0.4, 0.3} : std::vector<double>(K, 1.0);
  const std::int64_t start = parse_date(config.start_date);
  for (int d = 0; d < config.num_days; ++d) {
    Rng rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(d)));
    DayInstance day;
    day.day = start + d;
    const double season = std::sin(6.283185307179586 * static_cast<double>((day.day + 80) % 365) / 365.0);
    const double temperature = round_to(12.0 + 10.0 * season + 3.0 * rng.normal(), 0.1);
    const double dew_point = round_to(temperature - 3.0 - 2.0 * std::abs(rng.normal()), 0.1);
    day.exogenous = {temperature, dew_point, static_cast<double>(day_of_week(day.day))};

    Matrix<int> S(I, K);
    for (std::size_t i = 0; i < I; ++i) {
      const auto n = rng.integer(config.min_zone_supply, config.max_zone_supply);
      for (std::int64_t t = 0; t < n; ++t) ++S(i, rng.categorical(soc_weights));
    }
    const double wf = weather_factor(config, day.exogenous);
    Matrix<int> Z(J, K);
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k) Z(j, k) = static_cast<int>(std::lround(base(j, k) * wf));
    day.instance = make_instance(supply_ids, demand_ids, std::move(S), std::move(Z), dist);
    day.instance.theta = config.theta;
    day.instance.fare_min = config.fare_min;
    day.instance.fare_max = config.fare_max;
    w.days.push_back(std::move(day));
  }
  return w;
}

double weather_factor(const SynthConfig& config, std::span<const double> exogenous) {
  if (exogenous.empty()) throw std::invalid_argument("weather_factor: temperature missing");
  return std::clamp(1.0 + config.weather_slope * (exogenous[0] - config.weather_pivot), config.weather_min,
                    config.weather_max);
}

Matrix<int> realized_demand(const SynthConfig& config, const FleetInstance& instance, const Decision& decision,
                            std::span<const double> exogenous) {
  const Matrix<double> base = config.demand_table();
  if (base.rows() != instance.num_demand() || base.cols() != instance.num_soc())
    throw std::invalid_argument("realized_demand: base demand does not match the instance");
  const double wf = weather_factor(config, exogenous);
  Matrix<int> z(instance.num_demand(), instance.num_soc());
  for (std::size_t j = 0; j < z.rows(); ++j)
    for (std::size_t k = 0; k < z.cols(); ++k) {
      const double price =
          std::max(0.0, 1.0 - config.elasticity * (decision.u_hat(j, k) - config.reference_fare) / config.reference_fare);
      z(j, k) = static_cast<int>(std::lround(base(j, k) * wf * price));
    }
  return z;
}

double simulate_profit(const FleetInstance& instance, const Decision& decision, std::span<const double> exogenous,
                       const SynthConfig& config) {
  if (!check_feasible(instance, decision).empty()) throw std::invalid_argument("simulate_profit: infeasible decision");
  FleetInstance realized = instance;
  realized.demand = realized_demand(config, instance, decision, exogenous);
  return profit(realized, decision);
}

Decision random_decision(const FleetInstance& instance, Rng& rng) {
  Decision d(instance);
  for (std::size_t i = 0; i < instance.num_supply(); ++i)
    for (std::size_t k = 0; k < instance.num_soc(); ++k)
      for (int t = 0; t < instance.supply(i, k); ++t) {
        if (rng.uniform() < 0.4) continue;
        ++d.alloc(i, rng.index(instance.num_demand()), k);
      }
  for (double& u : d.u_hat.data()) u = rng.uniform(instance.fare_min, instance.fare_max);
  return d;
}

FeatureSchema world_schema(const World& world) {
  if (world.days.empty()) throw std::invalid_argument("world has no days");
  return make_schema(exogenous_names(), world.days.front().instance);
}

Dataset training_data(const World& world) {
  Dataset data;
  const FeatureSchema schema = world_schema(world);
  for (std::size_t d = 0; d < world.days.size(); ++d) {
    const DayInstance& day = world.days[d];
    Rng rng(derive_seed(world.config.seed, 5000 + d));
    for (int s = 0; s < world.config.samples_per_day; ++s) {
      const Decision dec = random_decision(day.instance, rng);
      data.add(feature_vector(schema, day.exogenous, dec), simulate_profit(day.instance, dec, day.exogenous, world.config));
    }
  }
  return data;
}

nlohmann::json world_to_json(const World& world) {
  nlohmann::json zones = nlohmann::json::array();
  for (const auto& [x, y] : world.zone_xy) zones.push_back({x, y});
  nlohmann::json days = nlohmann::json::array();
  for (const DayInstance& d : world.days)
    days.push_back({{"date", format_date(d.day)}, {"exogenous", d.exogenous}, {"instance", instance_to_json(d.instance)}});
  return {{"schema", "fleetopt.world/1"},
          {"config", synth_config_to_json(world.config)},
          {"exogenous_names", exogenous_names()},
          {"zones", zones},
          {"days", days}};
}

World world_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("schema", "") != "fleetopt.world/1")
      throw FormatError("world: missing or unsupported schema tag");
    World w;
    w.config = synth_config_from_json(doc.at("config"));
    for (const auto& z : doc.at("zones")) w.zone_xy.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
    for (const auto& d : doc.at("days")) {
      DayInstance day;
      day.day = parse_date(d.at("date").get<std::string>());
      day.exogenous = d.at("exogenous").get<std::vector<double>>();
      if (day.exogenous.size() != exogenous_names().size()) throw FormatError("world: exogenous vector has wrong size");
      day.instance = instance_from_json(d.at("instance"));
      w.days.push_back(std::move(day));
    }
    if (w.days.empty()) throw FormatError("world: no days");
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("world: ") + e.what());
  }
}

}  // namespace fleetopt::data
