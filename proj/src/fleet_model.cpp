#include "fleetopt/fleet_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fleetopt {

using mip::Relation;
using mip::Term;
using mip::VarKind;

void FleetInstance::validate() const {
  const std::size_t I = num_supply(), J = num_demand();
  if (I == 0 || J == 0 || soc_levels < 1) throw std::invalid_argument("instance needs |I|, |J|, |K| >= 1");
  const std::size_t K = num_soc();
  std::set<int> seen(supply_areas.begin(), supply_areas.end());
  if (seen.size() != I) throw std::invalid_argument("duplicate supply area id");
  for (int j : demand_areas)
    if (!seen.insert(j).second) throw std::invalid_argument("area " + std::to_string(j) + " is both supply and demand, or repeated");
  if (supply.rows() != I || supply.cols() != K) throw std::invalid_argument("supply must be |I| x |K|");
  if (demand.rows() != J || demand.cols() != K) throw std::invalid_argument("demand must be |J| x |K|");
  if (distance_km.rows() != I || distance_km.cols() != J) throw std::invalid_argument("distance_km must be |I| x |J|");
  if (booking_fee.size() != J) throw std::invalid_argument("booking_fee must have |J| entries");
  for (int s : supply.data())
    if (s < 0) throw std::invalid_argument("negative supply");
  for (int z : demand.data())
    if (z < 0) throw std::invalid_argument("negative demand");
  for (double d : distance_km.data())
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("distances must be finite and nonnegative");
  for (double b : booking_fee)
    if (!std::isfinite(b)) throw std::invalid_argument("booking fee must be finite");
  if (!(inconvenience_rate >= 0.0)) throw std::invalid_argument("inconvenience_rate must be nonnegative");
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  if (!(fare_min <= fare_max) || !std::isfinite(fare_min) || !std::isfinite(fare_max))
    throw std::invalid_argument("fare bounds must be finite with min <= max");
}

FleetInstance make_instance(std::vector<int> supply_areas, std::vector<int> demand_areas, Matrix<int> supply,
                            Matrix<int> demand, Matrix<double> distance_km) {
  FleetInstance inst;
  inst.soc_levels = static_cast<int>(supply.cols());
  inst.booking_fee.assign(demand_areas.size(), 5.0);
  inst.supply_areas = std::move(supply_areas);
  inst.demand_areas = std::move(demand_areas);
  inst.supply = std::move(supply);
  inst.demand = std::move(demand);
  inst.distance_km = std::move(distance_km);
  inst.validate();
  return inst;
}

Decision::Decision(const FleetInstance& instance)
    : num_supply(instance.num_supply()),
      num_demand(instance.num_demand()),
      num_soc(instance.num_soc()),
      x(num_supply * num_demand * num_soc, 0),
      u_hat(num_demand, num_soc, instance.fare_min) {}

namespace {

void check_dimensions(const FleetInstance& inst, const Decision& dec) {
  if (dec.num_supply != inst.num_supply() || dec.num_demand != inst.num_demand() || dec.num_soc != inst.num_soc() ||
      dec.x.size() != inst.num_supply() * inst.num_demand() * inst.num_soc() || dec.u_hat.rows() != inst.num_demand() ||
      dec.u_hat.cols() != inst.num_soc())
    throw std::invalid_argument("decision dimensions do not match the instance");
}

}  // namespace

FulfillmentState cascade_fulfill(const FleetInstance& instance, const Decision& decision) {
  check_dimensions(instance, decision);
  const std::size_t I = instance.num_supply(), J = instance.num_demand(), K = instance.num_soc();
  FulfillmentState st{Matrix<int>(J, K), Matrix<int>(J, K)};
  for (std::size_t j = 0; j < J; ++j) {
    int carried = 0;
    for (std::size_t k = K; k-- > 0;) {
      int inflow = 0;
      for (std::size_t i = 0; i < I; ++i) {
        const int a = decision.alloc(i, j, k);
        if (a < 0) throw std::invalid_argument("negative allocation");
        inflow += a;
      }
      const int available = inflow + carried;
      st.d(j, k) = std::min(instance.demand(j, k), available);
      st.v(j, k) = std::max(0, available - instance.demand(j, k));
      carried = st.v(j, k);
    }
  }
  return st;
}

double profit(const FleetInstance& instance, const Decision& decision, const FulfillmentState& fulfillment) {
  if (!(fulfillment == cascade_fulfill(instance, decision)))
    throw std::invalid_argument("fulfillment is inconsistent with the decision");
  const std::size_t I = instance.num_supply(), J = instance.num_demand(), K = instance.num_soc();
  double total = 0.0;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k)
      total += instance.revenue_per_trip(j, decision.u_hat(j, k)) * fulfillment.d(j, k);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k) total -= instance.cost(i, j) * decision.alloc(i, j, k);
  return total;
}

double profit(const FleetInstance& instance, const Decision& decision) {
  return profit(instance, decision, cascade_fulfill(instance, decision));
}

std::vector<Violation> check_feasible(const FleetInstance& instance, const Decision& decision) {
  std::vector<Violation> out;
  try {
    check_dimensions(instance, decision);
  } catch (const std::invalid_argument&) {
    out.push_back(Violation{"dimension", {}, -1.0});
    return out;
  }
  const std::size_t I = instance.num_supply(), J = instance.num_demand(), K = instance.num_soc();
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      int used = 0;
      for (std::size_t j = 0; j < J; ++j) {
        const int a = decision.alloc(i, j, k);
        if (a < 0)
          out.push_back(Violation{"nonnegativity", {static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)},
                                  static_cast<double>(a)});
        used += a;
      }
      if (used > instance.supply(i, k))
        out.push_back(Violation{"supply", {static_cast<int>(i), static_cast<int>(k)},
                                static_cast<double>(instance.supply(i, k) - used)});
    }
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k) {
      const double u = decision.u_hat(j, k);
      if (!(u >= instance.fare_min))
        out.push_back(Violation{"fare_lower", {static_cast<int>(j), static_cast<int>(k)}, u - instance.fare_min});
      if (!(u <= instance.fare_max))
        out.push_back(Violation{"fare_upper", {static_cast<int>(j), static_cast<int>(k)}, instance.fare_max - u});
    }
  return out;
}

void PriceGrid::validate(const FleetInstance& instance) const {
  if (num_demand != instance.num_demand() || num_soc != instance.num_soc() || points.size() != num_demand * num_soc)
    throw std::invalid_argument("price grid dimensions do not match the instance");
  for (const auto& list : points) {
    if (list.empty()) throw std::invalid_argument("empty price grid");
    for (std::size_t p = 0; p < list.size(); ++p) {
      if (list[p] < instance.fare_min - 1e-12 || list[p] > instance.fare_max + 1e-12)
        throw std::invalid_argument("price grid point outside fare bounds");
      if (p > 0 && !(list[p] > list[p - 1])) throw std::invalid_argument("price grid must be strictly increasing");
    }
  }
}

PriceGrid uniform_price_grid(const FleetInstance& instance, int n) {
  if (n < 1) throw std::invalid_argument("price grid needs at least one point");
  PriceGrid g{instance.num_demand(), instance.num_soc(), {}};
  std::vector<double> pts;
  if (n == 1 || instance.fare_min == instance.fare_max) {
    pts.push_back(0.5 * (instance.fare_min + instance.fare_max));
  } else {
    for (int p = 0; p < n; ++p)
      pts.push_back(instance.fare_min + (instance.fare_max - instance.fare_min) * p / (n - 1));
  }
  g.points.assign(g.num_demand * g.num_soc, pts);
  return g;
}

std::string x_name(std::size_t i, std::size_t j, std::size_t k) {
  return "x[" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + "]";
}

std::string u_hat_name(std::size_t j, std::size_t k) {
  return "u_hat[" + std::to_string(j) + "," + std::to_string(k) + "]";
}

DeterministicMip build_deterministic_mip(const FleetInstance& instance, const PriceGrid& grid) {
  instance.validate();
  grid.validate(instance);
  const std::size_t I = instance.num_supply(), J = instance.num_demand(), K = instance.num_soc();
  DeterministicMip m;
  m.grid = grid;
  mip::MipProblem& p = m.problem;
  auto jk = [&](std::size_t j, std::size_t k) { return std::to_string(j) + "," + std::to_string(k); };

  m.x.resize(I * J * K);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        m.x[(i * J + j) * K + k] = p.add_variable(x_name(i, j, k), VarKind::Integer, 0, instance.supply(i, k));

  m.d.resize(J * K);
  m.v.resize(J * K);
  m.delta.resize(J * K);
  m.rho.resize(J * K);
  m.prod.resize(J * K);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k) {
      double max_inflow = 0.0;
      for (std::size_t i = 0; i < I; ++i)
        for (std::size_t l = k; l < K; ++l) max_inflow += instance.supply(i, l);
      const double z = instance.demand(j, k);
      const std::size_t c = j * K + k;
      m.d[c] = p.add_variable("d[" + jk(j, k) + "]", VarKind::Integer, 0, z);
      m.v[c] = p.add_variable("v[" + jk(j, k) + "]", VarKind::Integer, 0, max_inflow);
      m.delta[c] = p.add_variable("delta[" + jk(j, k) + "]", VarKind::Binary, 0, 1);
      const auto& pts = grid.at(j, k);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        const std::string tag = jk(j, k) + "," + std::to_string(q);
        m.rho[c].push_back(p.add_variable("rho[" + tag + "]", VarKind::Binary, 0, 1));
        // Integral whenever rho and d are; declared so to keep values exact.
        m.prod[c].push_back(p.add_variable("rho_d[" + tag + "]", VarKind::Integer, 0, z));
      }
    }

  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<Term> t;
      for (std::size_t j = 0; j < J; ++j) t.push_back({m.x[(i * J + j) * K + k], 1.0});
      p.add_constraint("supply[" + std::to_string(i) + "," + std::to_string(k) + "]", std::move(t), Relation::LessEqual,
                       instance.supply(i, k));
    }

  mip::Objective obj{mip::Sense::Maximize, {}, 0.0};
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t c = j * K + k;
      const double z = instance.demand(j, k);
      const double big_v = p.variable(m.v[c]).upper;
      // d + v = sum_i x + v[k+1]
      std::vector<Term> bal{{m.d[c], 1.0}, {m.v[c], 1.0}};
      for (std::size_t i = 0; i < I; ++i) bal.push_back({m.x[(i * J + j) * K + k], -1.0});
      if (k + 1 < K) bal.push_back({m.v[c + 1], -1.0});
      p.add_constraint("balance[" + jk(j, k) + "]", std::move(bal), Relation::Equal, 0.0);
      // Surplus only when the level is saturated: v <= M_v delta, z - d <= z (1 - delta).
      p.add_constraint("surplus[" + jk(j, k) + "]", {{m.v[c], 1.0}, {m.delta[c], -big_v}}, Relation::LessEqual, 0.0);
      p.add_constraint("saturate[" + jk(j, k) + "]", {{m.d[c], -1.0}, {m.delta[c], z}}, Relation::LessEqual, 0.0);

      std::vector<Term> pick;
      for (int r : m.rho[c]) pick.push_back({r, 1.0});
      p.add_constraint("price[" + jk(j, k) + "]", std::move(pick), Relation::Equal, 1.0);
      const auto& pts = grid.at(j, k);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        const int t = m.prod[c][q], r = m.rho[c][q];
        const std::string tag = jk(j, k) + "," + std::to_string(q);
        p.add_constraint("prod_rho[" + tag + "]", {{t, 1.0}, {r, -z}}, Relation::LessEqual, 0.0);
        p.add_constraint("prod_d[" + tag + "]", {{t, 1.0}, {m.d[c], -1.0}}, Relation::LessEqual, 0.0);
        p.add_constraint("prod_lb[" + tag + "]", {{t, 1.0}, {m.d[c], -1.0}, {r, -z}}, Relation::GreaterEqual, -z);
        obj.terms.push_back({t, instance.theta * pts[q]});
      }
      obj.terms.push_back({m.d[c], instance.booking_fee[j]});
    }
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k) obj.terms.push_back({m.x[(i * J + j) * K + k], -instance.cost(i, j)});
  p.set_objective(std::move(obj));
  return m;
}

Decision decision_from_solution(const FleetInstance& instance, const DeterministicMip& model,
                                const std::vector<double>& values) {
  Decision dec(instance);
  for (std::size_t c = 0; c < dec.x.size(); ++c)
    dec.x[c] = static_cast<int>(std::lround(values[static_cast<std::size_t>(model.x[c])]));
  const std::size_t J = instance.num_demand(), K = instance.num_soc();
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t c = j * K + k;
      const auto& pts = model.grid.at(j, k);
      std::size_t best = 0;
      for (std::size_t q = 1; q < pts.size(); ++q)
        if (values[static_cast<std::size_t>(model.rho[c][q])] > values[static_cast<std::size_t>(model.rho[c][best])]) best = q;
      dec.u_hat(j, k) = pts[best];
    }
  return dec;
}

namespace {

template <class T>
nlohmann::json matrix_json(const Matrix<T>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
Matrix<T> matrix_from(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) throw FormatError(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  Matrix<T> m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw FormatError(std::string(what) + ": row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw FormatError(std::string(what) + ": non-numeric entry");
      if constexpr (std::is_integral_v<T>) {
        if (!j[r][c].is_number_integer()) throw FormatError(std::string(what) + ": expected integers");
      }
      m(r, c) = j[r][c].get<T>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json instance_to_json(const FleetInstance& inst) {
  return nlohmann::json{{"schema", "fleetopt.instance/1"},
                        {"supply_areas", inst.supply_areas},
                        {"demand_areas", inst.demand_areas},
                        {"soc_levels", inst.soc_levels},
                        {"supply", matrix_json(inst.supply)},
                        {"demand", matrix_json(inst.demand)},
                        {"distance_km", matrix_json(inst.distance_km)},
                        {"inconvenience_rate", inst.inconvenience_rate},
                        {"booking_fee", inst.booking_fee},
                        {"theta", inst.theta},
                        {"fare_bounds", {inst.fare_min, inst.fare_max}}};
}

FleetInstance instance_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("schema", "") != "fleetopt.instance/1")
      throw FormatError("instance: missing or unsupported schema tag");
    FleetInstance inst;
    inst.supply_areas = doc.at("supply_areas").get<std::vector<int>>();
    inst.demand_areas = doc.at("demand_areas").get<std::vector<int>>();
    inst.soc_levels = doc.at("soc_levels").get<int>();
    if (inst.soc_levels < 1) throw FormatError("instance: soc_levels must be positive");
    const std::size_t I = inst.supply_areas.size(), J = inst.demand_areas.size(), K = inst.num_soc();
    inst.supply = matrix_from<int>(doc.at("supply"), I, K, "supply");
    inst.demand = matrix_from<int>(doc.at("demand"), J, K, "demand");
    inst.distance_km = matrix_from<double>(doc.at("distance_km"), I, J, "distance_km");
    inst.inconvenience_rate = doc.value("inconvenience_rate", 0.5);
    inst.booking_fee = doc.contains("booking_fee") ? doc.at("booking_fee").get<std::vector<double>>() : std::vector<double>(J, 5.0);
    inst.theta = doc.value("theta", 0.2);
    if (doc.contains("fare_bounds")) {
      const auto fb = doc.at("fare_bounds").get<std::vector<double>>();
      if (fb.size() != 2) throw FormatError("instance: fare_bounds must have two entries");
      inst.fare_min = fb[0];
      inst.fare_max = fb[1];
    }
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("instance: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("instance: ") + e.what());
  }
}

nlohmann::json decision_to_json(const Decision& d) {
  nlohmann::json x = nlohmann::json::array();
  for (std::size_t i = 0; i < d.num_supply; ++i) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < d.num_demand; ++j) {
      nlohmann::json ks = nlohmann::json::array();
      for (std::size_t k = 0; k < d.num_soc; ++k) ks.push_back(d.alloc(i, j, k));
      rows.push_back(std::move(ks));
    }
    x.push_back(std::move(rows));
  }
  return nlohmann::json{{"x", std::move(x)}, {"u_hat", matrix_json(d.u_hat)}};
}

Decision decision_from_json(const nlohmann::json& doc, const FleetInstance& inst) {
  try {
    Decision d(inst);
    const auto& x = doc.at("x");
    if (!x.is_array() || x.size() != d.num_supply) throw FormatError("decision: x has wrong shape");
    for (std::size_t i = 0; i < d.num_supply; ++i) {
      if (!x[i].is_array() || x[i].size() != d.num_demand) throw FormatError("decision: x has wrong shape");
      for (std::size_t j = 0; j < d.num_demand; ++j) {
        if (!x[i][j].is_array() || x[i][j].size() != d.num_soc) throw FormatError("decision: x has wrong shape");
        for (std::size_t k = 0; k < d.num_soc; ++k) d.alloc(i, j, k) = x[i][j][k].get<int>();
      }
    }
    d.u_hat = matrix_from<double>(doc.at("u_hat"), d.num_demand, d.num_soc, "u_hat");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("decision: ") + e.what());
  }
}

}  // namespace fleetopt
