#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fleetopt/forest.hpp"
#include "fleetopt/mip/problem.hpp"

namespace fleetopt {

struct EncoderConfig {
  enum class BigM { PerNode, Global };
  double epsilon_strict = 1e-3;  // open side of splits on continuous features; keep above M * 1e-6
  BigM big_m_mode = BigM::PerNode;
  double global_m = 1e4;

  void validate() const;
};

/// Replaces every split on a fixed feature by the subtree the fixed value
/// takes. `fixed` is indexed by feature; nullopt leaves the feature free.
Tree prune(const Tree& tree, std::span<const std::optional<double>> fixed);

struct LeafTrace {
  int leaf = -1;
  std::vector<int> path;  // node ids from the root to the leaf
};

/// Descends with "feature <= threshold goes left".
LeafTrace trace_leaf(const Tree& tree, std::span<const double> features);

/// The forest's MIP encoding: one binary q per tree edge (the root's
/// incoming edge is a variable fixed to 1), two big-M rows and one flow row
/// per interior node, one leaf row per tree.
struct MipFragment {
  std::vector<Tree> trees;             // pruned trees, same order as the forest
  std::vector<std::vector<int>> q;     // [tree][node] -> variable; empty for single-leaf trees
  std::vector<int> feature_var;        // feature -> variable, -1 when fixed
  mip::Objective objective;            // mean of the selected leaf values
  int num_q = 0;
  int branching_rows = 0;
  int flow_rows = 0;
  int leaf_rows = 0;

  /// q values implied by a full feature vector (pairs of variable, value).
  std::vector<std::pair<int, double>> q_assignment(std::span<const double> features) const;
};

/// Adds the encoding of `forest` to `problem`. `feature_var[f]` is the MIP
/// variable of feature f, or -1 when `fixed[f]` holds its value. Decision
/// features must have finite bounds in `problem`; integer variables use the
/// integer right side floor(b) + 1, continuous ones b + epsilon_strict.
MipFragment encode(const Forest& forest, std::span<const std::optional<double>> fixed,
                   std::span<const int> feature_var, mip::MipProblem& problem, const EncoderConfig& config = {});

/// Feature-driven pre-allocation model: integer x with supply rows, fare
/// variables in the fare bounds, and the forest as the profit objective.
struct FeatureMip {
  mip::MipProblem problem;
  std::vector<int> x;      // Decision::index order
  std::vector<int> u_hat;  // j * K + k
  MipFragment fragment;
};

FeatureMip build_feature_mip(const FleetInstance& instance, const Forest& forest, std::span<const double> exogenous,
                             const EncoderConfig& config = {});

/// Decision read back from a solution of build_feature_mip.
Decision decision_from_feature_solution(const FleetInstance& instance, const FeatureMip& model,
                                        std::span<const double> values);

}  // namespace fleetopt
