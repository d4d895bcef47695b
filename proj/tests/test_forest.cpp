#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "fleetopt/forest.hpp"

using namespace fleetopt;
using namespace fixture;

namespace {

FeatureSchema numbered_schema(std::size_t p) {
  FeatureSchema s;
  for (std::size_t f = 0; f < p; ++f) s.names.push_back("f" + std::to_string(f));
  s.exogenous_count = p;
  return s;
}

Dataset random_dataset(Rng& rng, std::size_t rows, std::size_t p) {
  Dataset d;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> f(p);
    for (double& v : f) v = rng.uniform(-5.0, 5.0);
    const double label = 3.0 * f[0] - (p > 1 ? f[1] * f[1] : 0.0) + rng.normal();
    d.add(std::move(f), label);
  }
  return d;
}

Forest constant_forest(std::initializer_list<double> leaves, std::size_t p = 1) {
  Forest f;
  f.schema = numbered_schema(p);
  for (double v : leaves) {
    Tree t;
    t.nodes.push_back(TreeNode{});
    t.nodes[0].value = v;
    f.trees.push_back(t);
  }
  return f;
}

Forest stump(double threshold, double left, double right) {
  Forest f = constant_forest({0.0});
  Tree& t = f.trees[0];
  t.nodes[0].feature = 0;
  t.nodes[0].threshold = threshold;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  TreeNode l, r;
  l.parent = r.parent = 0;
  l.value = left;
  r.value = right;
  t.nodes.push_back(l);
  t.nodes.push_back(r);
  return f;
}

}  // namespace

TEST_CASE("train examples") {
  SUBCASE("one row gives single leaves") {
    Dataset d;
    d.add({1.0, 2.0}, 7.5);
    const Forest f = train(numbered_schema(2), d, {});
    CHECK(f.trees.size() == 25);
    for (const Tree& t : f.trees) {
      REQUIRE(t.nodes.size() == 1);
      CHECK(t.nodes[0].value == 7.5);
    }
  }
  SUBCASE("label equals feature with two values splits at the midpoint") {
    Dataset d;
    for (double v : {0.0, 10.0, 0.0, 10.0}) d.add({v}, v);
    TrainConfig cfg;
    cfg.bootstrap = false;
    cfg.min_samples_leaf = 1;
    const Forest f = train(numbered_schema(1), d, cfg);
    for (const Tree& t : f.trees) {
      REQUIRE(t.nodes.size() == 3);
      CHECK(t.nodes[0].threshold == 5.0);
    }
    CHECK(f.predict(std::vector<double>{0.0}) == 0.0);
    CHECK(f.predict(std::vector<double>{10.0}) == 10.0);
  }
  SUBCASE("constant labels give single leaves") {
    Dataset d;
    for (int r = 0; r < 10; ++r) d.add({static_cast<double>(r)}, 3.0);
    for (const Tree& t : train(numbered_schema(1), d, {}).trees) CHECK(t.nodes.size() == 1);
  }
  SUBCASE("ties go to the lowest feature") {
    Dataset d;
    for (double v : {1.0, 2.0, 3.0, 4.0}) d.add({v, v}, v > 2.5 ? 1.0 : 0.0);
    TrainConfig cfg;
    cfg.bootstrap = false;
    cfg.features_per_split = 1.0;
    cfg.min_samples_leaf = 1;
    const Forest f = train(numbered_schema(2), d, cfg);
    for (const Tree& t : f.trees) CHECK(t.nodes[0].feature == 0);
  }
  SUBCASE("same seed gives identical forests, another seed does not") {
    Rng rng(1);
    const Dataset d = random_dataset(rng, 80, 6);
    TrainConfig cfg;
    cfg.seed = 99;
    const Forest a = train(numbered_schema(6), d, cfg);
    const Forest b = train(numbered_schema(6), d, cfg);
    CHECK(a.trees == b.trees);
    cfg.seed = 100;
    CHECK_FALSE(train(numbered_schema(6), d, cfg).trees == a.trees);
  }
  SUBCASE("depth and leaf size limits hold") {
    Rng rng(2);
    const Dataset d = random_dataset(rng, 200, 4);
    TrainConfig cfg;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 5;
    const Forest f = train(numbered_schema(4), d, cfg);
    for (const Tree& t : f.trees) {
      CHECK(t.depth() <= 3);
      CHECK(t.num_leaves() * 2 - 1 == t.nodes.size());
      for (const TreeNode& n : t.nodes) CHECK(std::isfinite(n.is_leaf() ? n.value : n.threshold));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(train(numbered_schema(1), Dataset{}, {}), std::invalid_argument);
    Dataset d;
    d.add({1.0, 2.0}, 1.0);
    CHECK_THROWS_AS(train(numbered_schema(1), d, {}), std::invalid_argument);
    TrainConfig bad;
    bad.n_trees = 0;
    CHECK_THROWS_AS(train(numbered_schema(2), d, bad), std::invalid_argument);
    bad = {};
    bad.test_fraction = 1.0;
    CHECK_THROWS_AS(train(numbered_schema(2), d, bad), std::invalid_argument);
  }
}

TEST_CASE("predict") {
  CHECK(constant_forest({4.0, 6.0}).predict(std::vector<double>{0.0}) == 5.0);
  CHECK(stump(3.5, 10.0, 20.0).predict(std::vector<double>{2.0}) == 10.0);
  CHECK(stump(3.5, 10.0, 20.0).predict(std::vector<double>{3.5}) == 10.0);
  CHECK(stump(3.5, 10.0, 20.0).predict(std::vector<double>{3.6}) == 20.0);
  CHECK_THROWS_AS(stump(3.5, 10.0, 20.0).predict(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("evaluate_r2") {
  Dataset d;
  for (double v : {1.0, 2.0, 3.0, 4.0}) d.add({v}, v);
  SUBCASE("perfect predictor") {
    TrainConfig cfg;
    cfg.bootstrap = false;
    cfg.min_samples_leaf = 1;
    cfg.max_depth = -1;
    CHECK(evaluate_r2(train(numbered_schema(1), d, cfg), d) == doctest::Approx(1.0));
  }
  SUBCASE("mean predictor") { CHECK(evaluate_r2(constant_forest({2.5}), d) == doctest::Approx(0.0)); }
  SUBCASE("held-out rows of a seeded set") {
    Rng rng(3);
    const Dataset all = random_dataset(rng, 300, 3);
    const auto [tr, te] = split_train_test(all, 0.3, 7);
    CHECK(te.size() == 90);
    CHECK(tr.size() == 210);
    const double r2 = evaluate_r2(train(numbered_schema(3), tr, {}), te);
    MESSAGE("held-out R^2 = " << r2);
    CHECK(r2 > 0.5);
    CHECK(r2 <= 1.0);
  }
  SUBCASE("errors") {
    Dataset flat;
    flat.add({1.0}, 2.0);
    CHECK_THROWS_AS(evaluate_r2(constant_forest({2.0}), flat), std::invalid_argument);
    flat.add({2.0}, 2.0);
    CHECK_THROWS_AS(evaluate_r2(constant_forest({2.0}), flat), std::invalid_argument);
  }
}

TEST_CASE("predict is piecewise constant") {
  Rng rng(4);
  const Dataset d = random_dataset(rng, 150, 4);
  const Forest f = train(numbered_schema(4), d, {});
  std::vector<std::set<double>> cuts(4);
  for (const Tree& t : f.trees)
    for (const TreeNode& n : t.nodes)
      if (!n.is_leaf()) cuts[static_cast<std::size_t>(n.feature)].insert(n.threshold);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-6.0, 6.0);
    const std::size_t g = rng.index(4);
    const auto hi = cuts[g].lower_bound(x[g]);
    const double upper = hi == cuts[g].end() ? x[g] + 10.0 : *hi;
    // Any value in (previous threshold, upper] stays in the same cell.
    const double lower = hi == cuts[g].begin() ? x[g] - 10.0 : *std::prev(hi);
    if (!(lower < x[g])) continue;
    std::vector<double> y = x;
    y[g] = lower + (upper - lower) * rng.uniform(0.01, 1.0);
    CHECK(f.predict(y) == f.predict(x));
  }
}

TEST_CASE("fully grown trees interpolate training rows") {
  Rng rng(5);
  const Dataset d = random_dataset(rng, 60, 3);
  TrainConfig cfg;
  cfg.bootstrap = false;
  cfg.max_depth = -1;
  cfg.min_samples_leaf = 1;
  cfg.features_per_split = 1.0;
  cfg.n_trees = 3;
  const Forest f = train(numbered_schema(3), d, cfg);
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (const Tree& t : f.trees) CHECK(t.predict(d.features[r]) == d.labels[r]);
    CHECK(f.predict(d.features[r]) == doctest::Approx(d.labels[r]).epsilon(1e-14));
  }
}

TEST_CASE("schema and feature vectors") {
  const FleetInstance inst = tiny(2, 2, 3);
  const FeatureSchema s = make_schema({"temperature", "dew_point", "day_of_week"}, inst);
  CHECK(s.size() == 3 + 12 + 6);
  Decision d(inst);
  d.alloc(1, 0, 2) = 4;
  d.u_hat(1, 1) = 9.0;
  const std::vector<double> exo{20.0, 10.0, 3.0};
  const auto v = feature_vector(s, exo, d);
  CHECK(s.names[3 + d.index(1, 0, 2)] == x_name(1, 0, 2));
  CHECK(v[3 + d.index(1, 0, 2)] == 4.0);
  CHECK(s.names[3 + 12 + 4] == u_hat_name(1, 1));
  CHECK(v[3 + 12 + 4] == 9.0);
  CHECK_THROWS_AS(make_schema({"x[0,0,0]"}, inst), std::invalid_argument);
  CHECK_THROWS_AS(feature_vector(s, std::vector<double>{1.0}, d), std::invalid_argument);
}

TEST_CASE("forest json round trip") {
  Rng rng(6);
  const Dataset d = random_dataset(rng, 100, 5);
  TrainConfig cfg;
  cfg.seed = 12345678901234ULL;
  cfg.features_per_split = 0.4;
  const Forest f = train(numbered_schema(5), d, cfg);
  const Forest g = forest_from_json(nlohmann::json::parse(forest_to_json(f).dump()));
  CHECK(g.trees == f.trees);
  CHECK(g.config == f.config);
  CHECK(g.schema.names == f.schema.names);
  CHECK(g.schema.exogenous_count == f.schema.exogenous_count);
  for (std::size_t r = 0; r < d.size(); ++r) CHECK(g.predict(d.features[r]) == f.predict(d.features[r]));

  nlohmann::json bad = forest_to_json(f);
  bad["schema"] = "fleetopt.forest/0";
  CHECK_THROWS_AS(forest_from_json(bad), FormatError);
  bad = forest_to_json(f);
  bad["trees"][0]["feature"] = 99;
  CHECK_THROWS_AS(forest_from_json(bad), FormatError);
  bad = forest_to_json(f);
  bad["trees"][0].erase("left");
  CHECK_THROWS_AS(forest_from_json(bad), FormatError);
}
