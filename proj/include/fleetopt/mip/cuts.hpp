#pragma once

#include <span>
#include <vector>

#include "fleetopt/mip/lp_engine.hpp"
#include "fleetopt/mip/problem.hpp"

namespace fleetopt::mip {

/// Gomory mixed-integer cuts read off the current optimal tableau of `lp`.
/// `integral` flags the structural columns; logical columns are treated as
/// continuous. Terms index the engine's structural columns. Only cuts
/// violated by the current point by at least 1e-7 are returned, strongest
/// first, at most `max_cuts`.
std::vector<CutRow> gomory_cuts(const LpEngine& lp, std::span<const char> integral, int max_cuts = 50);

/// Lifted minimal-cover cuts separated from knapsack rows whose columns are
/// all binary. Rows with a finite lower bound are used in negated form.
std::vector<CutRow> cover_cuts(std::span<const LpRow> rows, std::span<const double> lower,
                               std::span<const double> upper, std::span<const char> integral,
                               std::span<const double> values);

/// Convenience overload over a MipProblem's rows and bounds.
std::vector<CutRow> cover_cuts(const MipProblem& problem, std::span<const double> values);

}  // namespace fleetopt::mip
