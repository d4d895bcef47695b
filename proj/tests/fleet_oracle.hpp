#pragma once

// Exhaustive enumeration of allocations and grid fares for tiny instances.

#include <functional>

#include "fleetopt/fleet_model.hpp"

namespace oracle {

/// Calls visit(x) for every allocation with sum_j x[i,j,k] <= S[i,k].
inline void for_each_allocation(const fleetopt::FleetInstance& inst,
                                const std::function<void(const fleetopt::Decision&)>& visit) {
  fleetopt::Decision d(inst);
  const std::size_t I = inst.num_supply(), J = inst.num_demand(), K = inst.num_soc();
  std::function<void(std::size_t, std::size_t, std::size_t, int)> rec = [&](std::size_t i, std::size_t k, std::size_t j,
                                                                            int left) {
    if (i == I) {
      visit(d);
      return;
    }
    if (j == J) {
      const std::size_t nk = k + 1 == K ? 0 : k + 1;
      const std::size_t ni = k + 1 == K ? i + 1 : i;
      rec(ni, nk, 0, ni < I ? inst.supply(ni, nk) : 0);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      d.alloc(i, j, k) = a;
      rec(i, k, j + 1, left - a);
    }
    d.alloc(i, j, k) = 0;
  };
  rec(0, 0, 0, inst.supply(0, 0));
}

/// Max profit over allocations and per-(j,k) grid fares. Fares only affect
/// revenue of fulfilled trips, so each (j,k) takes its best grid point.
inline double best_profit(const fleetopt::FleetInstance& inst, const fleetopt::PriceGrid& grid, long* count = nullptr) {
  double best = -1e300;
  long n = 0;
  for_each_allocation(inst, [&](const fleetopt::Decision& x) {
    ++n;
    // Enumerate all fare combinations explicitly.
    fleetopt::Decision d = x;
    const std::size_t J = inst.num_demand(), K = inst.num_soc();
    std::function<void(std::size_t)> fares = [&](std::size_t c) {
      if (c == J * K) {
        best = std::max(best, fleetopt::profit(inst, d));
        return;
      }
      for (double u : grid.at(c / K, c % K)) {
        d.u_hat(c / K, c % K) = u;
        fares(c + 1);
      }
    };
    fares(0);
  });
  if (count) *count = n;
  return best;
}

}  // namespace oracle
