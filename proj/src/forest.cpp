#include "fleetopt/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace fleetopt {

void FeatureSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) throw std::invalid_argument("duplicate feature name '" + n + "'");
  if (exogenous_count > names.size()) throw std::invalid_argument("exogenous_count exceeds the schema size");
}

FeatureSchema make_schema(std::vector<std::string> exogenous, const FleetInstance& instance) {
  FeatureSchema s;
  s.exogenous_count = exogenous.size();
  s.names = std::move(exogenous);
  for (std::size_t i = 0; i < instance.num_supply(); ++i)
    for (std::size_t j = 0; j < instance.num_demand(); ++j)
      for (std::size_t k = 0; k < instance.num_soc(); ++k) s.names.push_back(x_name(i, j, k));
  for (std::size_t j = 0; j < instance.num_demand(); ++j)
    for (std::size_t k = 0; k < instance.num_soc(); ++k) s.names.push_back(u_hat_name(j, k));
  s.validate();
  return s;
}

std::vector<double> feature_vector(const FeatureSchema& schema, std::span<const double> exogenous,
                                   const Decision& decision) {
  if (exogenous.size() != schema.exogenous_count) throw std::invalid_argument("exogenous block size mismatch");
  std::vector<double> f(exogenous.begin(), exogenous.end());
  for (int x : decision.x) f.push_back(x);
  for (double u : decision.u_hat.data()) f.push_back(u);
  if (f.size() != schema.size()) throw std::invalid_argument("decision does not match the feature schema");
  return f;
}

int Tree::leaf_of(std::span<const double> features) const {
  int n = 0;
  while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
    const TreeNode& node = nodes[static_cast<std::size_t>(n)];
    n = features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return n;
}

int Tree::depth() const {
  int best = 0;
  std::vector<int> d(nodes.size(), 0);
  for (std::size_t n = 1; n < nodes.size(); ++n) {
    d[n] = d[static_cast<std::size_t>(nodes[n].parent)] + 1;
    best = std::max(best, d[n]);
  }
  return best;
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

void TrainConfig::validate() const {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be at least 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be at least 1");
  if (features_per_split < 0.0 || features_per_split > 1.0)
    throw std::invalid_argument("features_per_split must lie in [0, 1]");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
}

void Dataset::add(std::vector<double> row, double label) {
  if (!features.empty() && row.size() != features.front().size()) throw std::invalid_argument("row width mismatch");
  features.push_back(std::move(row));
  labels.push_back(label);
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(data.size())));
  if (data.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, data.size() - 1);
  std::pair<Dataset, Dataset> out;
  for (std::size_t q = 0; q < order.size(); ++q) {
    Dataset& into = q < n_test ? out.second : out.first;
    into.add(data.features[order[q]], data.labels[order[q]]);
  }
  return out;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class Builder {
 public:
  Builder(const Dataset& data, const TrainConfig& cfg, std::size_t per_split, std::uint64_t seed)
      : data_(data), cfg_(cfg), per_split_(per_split), rng_(seed) {}

  Tree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(rows, -1, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, int parent, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.back().parent = parent;
    double sum = 0.0;
    for (std::size_t r : rows) sum += data_.labels[r];
    const double mean = sum / static_cast<double>(rows.size());

    Split split;
    const bool can_split = (cfg_.max_depth < 0 || depth < cfg_.max_depth) &&
                           rows.size() >= 2 * static_cast<std::size_t>(cfg_.min_samples_leaf);
    if (can_split) split = best_split(rows);
    if (split.feature < 0) {
      tree_.nodes[static_cast<std::size_t>(id)].value = mean;
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows)
      (data_.features[r][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, id, depth + 1);
    const int rr = grow(right, id, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t p = data_.features.front().size();
    std::vector<std::size_t> all(p);
    std::iota(all.begin(), all.end(), 0);
    if (per_split_ >= p) return all;
    for (std::size_t q = 0; q < per_split_; ++q) std::swap(all[q], all[q + rng_.index(p - q)]);
    all.resize(per_split_);
    std::sort(all.begin(), all.end());
    return all;
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    const std::size_t n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
    double total = 0.0, total_sq = 0.0;
    for (std::size_t r : rows) {
      total += data_.labels[r];
      total_sq += data_.labels[r] * data_.labels[r];
    }
    const double base = total * total / static_cast<double>(n);
    const double sse = std::max(0.0, total_sq - base);
    Split best;
    const double tol = 1e-12 * std::max(1.0, sse);
    std::vector<std::pair<double, double>> col(n);  // (feature value, label)
    for (std::size_t f : candidate_features()) {
      for (std::size_t q = 0; q < n; ++q) col[q] = {data_.features[rows[q]][f], data_.labels[rows[q]]};
      std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (std::size_t q = 0; q + 1 < n; ++q) {
        left_sum += col[q].second;
        if (col[q].first == col[q + 1].first) continue;
        const std::size_t nl = q + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - base;
        if (gain > tol && gain > best.gain + tol) {
          double mid = 0.5 * (col[q].first + col[q + 1].first);
          if (!(mid < col[q + 1].first)) mid = col[q].first;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  const TrainConfig& cfg_;
  std::size_t per_split_;
  Rng rng_;
  Tree tree_;
};

}  // namespace

double Forest::predict(std::span<const double> features) const {
  if (features.size() != schema.size()) throw std::invalid_argument("feature vector does not match the schema");
  double sum = 0.0;
  for (const Tree& t : trees) sum += t.predict(features);
  return sum / static_cast<double>(trees.size());
}

std::size_t Forest::total_nodes() const {
  std::size_t n = 0;
  for (const Tree& t : trees) n += t.nodes.size();
  return n;
}

Forest train(const FeatureSchema& schema, const Dataset& data, const TrainConfig& config) {
  config.validate();
  schema.validate();
  if (data.size() == 0) throw std::invalid_argument("empty training data");
  for (const auto& row : data.features)
    if (row.size() != schema.size()) throw std::invalid_argument("training row does not match the schema");
  const std::size_t p = schema.size();
  std::size_t per_split =
      config.features_per_split > 0.0
          ? static_cast<std::size_t>(std::lround(config.features_per_split * static_cast<double>(p)))
          : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))));
  per_split = std::clamp<std::size_t>(per_split, 1, std::max<std::size_t>(p, 1));

  Forest forest;
  forest.schema = schema;
  forest.config = config;
  for (int h = 0; h < config.n_trees; ++h) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(h));
    Rng sampler(derive_seed(seed, 0));
    std::vector<std::size_t> rows(data.size());
    if (config.bootstrap) {
      for (auto& r : rows) r = sampler.index(data.size());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    Builder builder(data, config, per_split, derive_seed(seed, 1));
    forest.trees.push_back(builder.build(std::move(rows)));
  }
  return forest;
}

double evaluate_r2(const Forest& forest, const Dataset& data) {
  if (data.size() < 2) throw std::invalid_argument("R^2 needs at least two rows");
  const double mean = std::accumulate(data.labels.begin(), data.labels.end(), 0.0) / static_cast<double>(data.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double e = data.labels[r] - forest.predict(data.features[r]);
    sse += e * e;
    sst += (data.labels[r] - mean) * (data.labels[r] - mean);
  }
  if (sst <= 0.0) throw std::invalid_argument("R^2 undefined for constant labels");
  return 1.0 - sse / sst;
}

namespace {

nlohmann::json node_json(const Tree& t, int n) {
  const TreeNode& node = t.nodes[static_cast<std::size_t>(n)];
  if (node.is_leaf()) return {{"value", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", node_json(t, node.left)},
          {"right", node_json(t, node.right)}};
}

int node_from_json(const nlohmann::json& j, Tree& t, int parent, std::size_t num_features) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  t.nodes.back().parent = parent;
  if (j.contains("value")) {
    const double v = j.at("value").get<double>();
    if (!std::isfinite(v)) throw FormatError("forest: non-finite leaf value");
    t.nodes[static_cast<std::size_t>(id)].value = v;
    return id;
  }
  const int f = j.at("feature").get<int>();
  const double thr = j.at("threshold").get<double>();
  if (f < 0 || static_cast<std::size_t>(f) >= num_features) throw FormatError("forest: split feature out of range");
  if (!std::isfinite(thr)) throw FormatError("forest: non-finite threshold");
  const int l = node_from_json(j.at("left"), t, id, num_features);
  const int r = node_from_json(j.at("right"), t, id, num_features);
  TreeNode& node = t.nodes[static_cast<std::size_t>(id)];
  node.feature = f;
  node.threshold = thr;
  node.left = l;
  node.right = r;
  return id;
}

}  // namespace

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"min_samples_leaf", c.min_samples_leaf},
          {"features_per_split", c.features_per_split},
          {"bootstrap", c.bootstrap},
          {"seed", c.seed},
          {"test_fraction", c.test_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& c) {
  try {
    TrainConfig t;
    t.n_trees = c.value("n_trees", t.n_trees);
    t.max_depth = c.value("max_depth", t.max_depth);
    t.min_samples_leaf = c.value("min_samples_leaf", t.min_samples_leaf);
    t.features_per_split = c.value("features_per_split", t.features_per_split);
    t.bootstrap = c.value("bootstrap", t.bootstrap);
    t.seed = c.value("seed", t.seed);
    t.test_fraction = c.value("test_fraction", t.test_fraction);
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
}

nlohmann::json forest_to_json(const Forest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : forest.trees) trees.push_back(node_json(t, 0));
  return {{"schema", "fleetopt.forest/1"},
          {"features", {{"names", forest.schema.names}, {"exogenous_count", forest.schema.exogenous_count}}},
          {"config", train_config_to_json(forest.config)},
          {"trees", trees}};
}

Forest forest_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != "fleetopt.forest/1") throw FormatError("unknown forest schema");
    Forest f;
    f.schema.names = doc.at("features").at("names").get<std::vector<std::string>>();
    f.schema.exogenous_count = doc.at("features").at("exogenous_count").get<std::size_t>();
    f.config = train_config_from_json(doc.at("config"));
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      node_from_json(t, tree, -1, f.schema.size());
      f.trees.push_back(std::move(tree));
    }
    if (f.trees.empty()) throw FormatError("forest: no trees");
    f.schema.validate();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("forest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("forest: ") + e.what());
  }
}

}  // namespace fleetopt
