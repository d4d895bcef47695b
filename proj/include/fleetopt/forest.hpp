#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetopt/fleet_model.hpp"

namespace fleetopt {

/// Ordered feature names: the exogenous block followed by the decision block
/// (every x[i,j,k] in Decision::index order, then every u_hat[j,k]).
struct FeatureSchema {
  std::vector<std::string> names;
  std::size_t exogenous_count = 0;

  std::size_t size() const { return names.size(); }
  /// Throws std::invalid_argument on duplicate names.
  void validate() const;
};

/// Exogenous names are taken as given; the decision block follows the instance shape.
FeatureSchema make_schema(std::vector<std::string> exogenous, const FleetInstance& instance);

/// Full feature vector for (exogenous values, decision).
std::vector<double> feature_vector(const FeatureSchema& schema, std::span<const double> exogenous,
                                   const Decision& decision);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1, right = -1, parent = -1;
  double value = 0.0;  // leaf prediction
  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Node 0 is the root. A sample goes left iff feature <= threshold.
struct Tree {
  std::vector<TreeNode> nodes;

  int leaf_of(std::span<const double> features) const;
  double predict(std::span<const double> features) const { return nodes[static_cast<std::size_t>(leaf_of(features))].value; }
  int depth() const;
  std::size_t num_leaves() const;
  bool operator==(const Tree&) const = default;
};

struct TrainConfig {
  int n_trees = 25;
  int max_depth = 6;  // negative means unbounded
  int min_samples_leaf = 2;
  double features_per_split = 0.0;  // fraction of features; 0 means sqrt(p)
  bool bootstrap = true;
  std::uint64_t seed = 1;
  double test_fraction = 0.3;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
  void add(std::vector<double> row, double label);
};

/// Seeded shuffle split; the test part gets round(fraction * n) rows, at least one of each side when n >= 2.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction, std::uint64_t seed);

struct Forest {
  FeatureSchema schema;
  TrainConfig config;
  std::vector<Tree> trees;

  /// Mean of the per-tree leaf values. Throws std::invalid_argument on a size mismatch.
  double predict(std::span<const double> features) const;
  std::size_t total_nodes() const;
};

/// CART with variance-reduction splits at midpoints between consecutive
/// distinct values; ties go to the lowest feature, then the lowest threshold.
Forest train(const FeatureSchema& schema, const Dataset& data, const TrainConfig& config);

/// 1 - SSE / SST. Throws std::invalid_argument for fewer than two rows or constant labels.
double evaluate_r2(const Forest& forest, const Dataset& data);

/// Missing keys keep their defaults. Throws FormatError.
TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json train_config_to_json(const TrainConfig& config);

nlohmann::json forest_to_json(const Forest& forest);
/// Throws FormatError on schema violations.
Forest forest_from_json(const nlohmann::json& doc);

}  // namespace fleetopt
