#pragma once

#include <span>

#include "fleetopt/mip/problem.hpp"

namespace fleetopt::mip {

/// LP-based branch-and-bound on the primary objective.
///
/// Root: bound propagation, fixed columns folded out, optional cut rounds.
/// Tree: depth-first plunging until an incumbent exists, then best-first by
/// bound (ties by creation order); most-fractional branching with ties to
/// the lowest index. `hint`, when it is a feasible full assignment, seeds
/// the incumbent.
Solution branch_and_bound(const MipProblem& problem, const SolveConfig& config = {},
                          std::span<const double> hint = {});

/// Two-stage solve: optimize the primary objective g to g*, then optimize
/// the secondary objective f subject to g within the lexicographic slack of
/// g*. Solution::objective reports g, secondary_objective f, and
/// primary_optimum g*.
Solution lexicographic_solve(const MipProblem& problem, const SolveConfig& config = {},
                             std::span<const double> hint = {});

}  // namespace fleetopt::mip
