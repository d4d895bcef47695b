#pragma once

// Small instances and decisions shared by the model-level tests.

#include "fleetopt/fleet_model.hpp"

namespace fixture {

using fleetopt::Decision;
using fleetopt::FleetInstance;
using fleetopt::Matrix;
using fleetopt::Rng;
using fleetopt::make_instance;

inline FleetInstance tiny(std::size_t I, std::size_t J, std::size_t K) {
  std::vector<int> sa, da;
  for (std::size_t i = 0; i < I; ++i) sa.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < J; ++j) da.push_back(static_cast<int>(I + j));
  return make_instance(sa, da, Matrix<int>(I, K, 0), Matrix<int>(J, K, 0), Matrix<double>(I, J, 1.0));
}

inline FleetInstance random_instance(Rng& rng, std::size_t I, std::size_t J, std::size_t K, int max_supply) {
  FleetInstance inst = tiny(I, J, K);
  for (int& s : inst.supply.data()) s = static_cast<int>(rng.integer(0, max_supply));
  for (int& z : inst.demand.data()) z = static_cast<int>(rng.integer(0, 4));
  for (double& d : inst.distance_km.data()) d = rng.uniform(0.5, 12.0);
  return inst;
}

inline Decision random_decision(Rng& rng, const FleetInstance& inst) {
  Decision d(inst);
  for (std::size_t i = 0; i < inst.num_supply(); ++i)
    for (std::size_t k = 0; k < inst.num_soc(); ++k) {
      int left = inst.supply(i, k);
      for (std::size_t j = 0; j < inst.num_demand(); ++j) {
        const int a = static_cast<int>(rng.integer(0, left));
        d.alloc(i, j, k) = a;
        left -= a;
      }
    }
  for (double& u : d.u_hat.data()) u = rng.uniform(inst.fare_min, inst.fare_max);
  return d;
}

}  // namespace fixture
