#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "fleet_oracle.hpp"
#include "fleetopt/mip/branch_and_bound.hpp"
#include "fleetopt/rf_encoder.hpp"

using namespace fleetopt;
using namespace fixture;

namespace {

FeatureSchema numbered_schema(std::size_t p, std::size_t exogenous = 0) {
  FeatureSchema s;
  for (std::size_t f = 0; f < p; ++f) s.names.push_back("f" + std::to_string(f));
  s.exogenous_count = exogenous;
  return s;
}

Forest stump_forest(double threshold, double left, double right) {
  Forest f;
  f.schema = numbered_schema(1);
  Tree t;
  TreeNode root, l, r;
  root.feature = 0;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  l.parent = r.parent = 0;
  l.value = left;
  r.value = right;
  t.nodes = {root, l, r};
  f.trees.push_back(t);
  return f;
}

// Training rows from random decisions on one instance; the label mixes
// profit with the exogenous block so that both matter.
struct World {
  FleetInstance inst;
  Forest forest;
  Dataset data;
  std::vector<std::vector<double>> exogenous;
};

World make_world(std::uint64_t seed, std::size_t I, std::size_t J, std::size_t K, int max_supply, int rows,
                 const TrainConfig& cfg = {}) {
  Rng rng(seed);
  World w;
  w.inst = random_instance(rng, I, J, K, max_supply);
  for (int& z : w.inst.demand.data()) z = static_cast<int>(rng.integer(1, 3));
  w.inst.fare_min = 5.0;
  w.inst.fare_max = 25.0;
  const FeatureSchema schema = make_schema({"temperature", "dew_point", "day_of_week"}, w.inst);
  for (int r = 0; r < rows; ++r) {
    std::vector<double> exo{rng.uniform(-5, 30), rng.uniform(-10, 20), static_cast<double>(rng.integer(0, 6))};
    Decision d = random_decision(rng, w.inst);
    for (double& u : d.u_hat.data()) u = 5.0 + 2.5 * static_cast<double>(rng.integer(0, 8));
    const double label = profit(w.inst, d) + 0.3 * exo[0] - 2.0 * (exo[2] >= 5 ? 1 : 0) + rng.normal();
    w.data.add(feature_vector(schema, exo, d), label);
    w.exogenous.push_back(exo);
  }
  w.forest = train(schema, w.data, cfg);
  return w;
}

double leaf_sum(const MipFragment& frag, std::size_t h, std::span<const double> values) {
  double s = 0.0;
  for (std::size_t n = 0; n < frag.trees[h].nodes.size(); ++n)
    if (frag.trees[h].nodes[n].is_leaf()) s += values[static_cast<std::size_t>(frag.q[h][n])];
  return s;
}

}  // namespace

TEST_CASE("prune") {
  const Forest stump = stump_forest(3.5, 10.0, 20.0);
  SUBCASE("fixed stump collapses to the taken leaf") {
    std::vector<std::optional<double>> fixed{2.0};
    const Tree t = prune(stump.trees[0], fixed);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].value == 10.0);
  }
  SUBCASE("no fixed features is the identity") {
    std::vector<std::optional<double>> fixed(1);
    CHECK(prune(stump.trees[0], fixed) == stump.trees[0]);
  }
  SUBCASE("prediction equality on random trees") {
    const World w = make_world(1, 2, 2, 2, 3, 120);
    Rng rng(2);
    const std::size_t e = w.forest.schema.exogenous_count;
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::optional<double>> fixed(w.forest.schema.size());
      std::vector<double> exo = w.exogenous[rng.index(w.exogenous.size())];
      exo[0] += rng.uniform(-1, 1);
      for (std::size_t f = 0; f < e; ++f) fixed[f] = exo[f];
      for (const Tree& t : w.forest.trees) {
        const Tree p = prune(t, fixed);
        CHECK(p.nodes.size() <= t.nodes.size());
        for (int r = 0; r < 100; ++r) {
          std::vector<double> full = exo;
          for (std::size_t f = e; f < w.forest.schema.size(); ++f) full.push_back(rng.uniform(-1, 30));
          CHECK(p.predict(full) == t.predict(full));
        }
      }
    }
  }
}

TEST_CASE("trace_leaf") {
  const Forest stump = stump_forest(3.5, 10.0, 20.0);
  CHECK(trace_leaf(stump.trees[0], std::vector<double>{3.5}).leaf == 1);
  CHECK(trace_leaf(stump.trees[0], std::vector<double>{3.5 + 1e-4}).leaf == 2);
  CHECK(trace_leaf(stump.trees[0], std::vector<double>{3.5}).path == std::vector<int>{0, 1});
  const World w = make_world(3, 2, 2, 2, 3, 100);
  Rng rng(4);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> full;
    for (std::size_t f = 0; f < w.forest.schema.size(); ++f) full.push_back(rng.uniform(-1, 30));
    for (const Tree& t : w.forest.trees) {
      const LeafTrace tr = trace_leaf(t, full);
      CHECK(t.nodes[static_cast<std::size_t>(tr.leaf)].value == t.predict(full));
      CHECK(tr.path.front() == 0);
      for (std::size_t s = 1; s < tr.path.size(); ++s)
        CHECK(t.nodes[static_cast<std::size_t>(tr.path[s])].parent == tr.path[s - 1]);
    }
  }
}

TEST_CASE("encode structure") {
  SUBCASE("single stump over an integer variable") {
    const Forest stump = stump_forest(3.5, 10.0, 20.0);
    mip::MipProblem p;
    const int y = p.add_variable("y", mip::VarKind::Integer, 0, 10);
    std::vector<std::optional<double>> fixed(1);
    std::vector<int> vars{y};
    const MipFragment frag = encode(stump, fixed, vars, p);
    CHECK(frag.num_q == 3);
    CHECK(frag.branching_rows == 2);
    CHECK(frag.flow_rows == 1);
    CHECK(frag.leaf_rows == 1);
    CHECK(p.num_constraints() == 4);
    CHECK(p.variable(frag.q[0][0]).lower == 1.0);
    p.set_objective(frag.objective);
    const auto sol = mip::branch_and_bound(p);
    CHECK(sol.objective == doctest::Approx(20.0));
    CHECK(sol.values[static_cast<std::size_t>(y)] >= 4.0);
    const auto lo = mip::branch_and_bound(mip::fix_variables(p, std::vector<std::pair<int, double>>{{y, 3.0}}));
    CHECK(lo.objective == doctest::Approx(10.0));
    const auto hi = mip::branch_and_bound(mip::fix_variables(p, std::vector<std::pair<int, double>>{{y, 4.0}}));
    CHECK(hi.objective == doctest::Approx(20.0));
  }
  SUBCASE("continuous features use the epsilon side") {
    const Forest stump = stump_forest(3.5, 10.0, 20.0);
    mip::MipProblem p;
    const int y = p.add_variable("y", mip::VarKind::Continuous, 0, 10);
    std::vector<std::optional<double>> fixed(1);
    std::vector<int> vars{y};
    EncoderConfig cfg;
    cfg.epsilon_strict = 0.01;
    const MipFragment frag = encode(stump, fixed, vars, p, cfg);
    p.set_objective(frag.objective);
    p.set_bounds(y, 0.0, 3.505);
    CHECK(mip::branch_and_bound(p).objective == doctest::Approx(10.0));
    p.set_bounds(y, 0.0, 3.51);
    CHECK(mip::branch_and_bound(p).objective == doctest::Approx(20.0));
  }
  SUBCASE("constant trees") {
    Forest f;
    f.schema = numbered_schema(1);
    for (double v : {4.0, 6.0}) {
      Tree t;
      t.nodes.push_back({});
      t.nodes[0].value = v;
      f.trees.push_back(t);
    }
    mip::MipProblem p;
    const int y = p.add_variable("y", mip::VarKind::Integer, 0, 3);
    std::vector<std::optional<double>> fixed(1);
    std::vector<int> vars{y};
    const MipFragment frag = encode(f, fixed, vars, p);
    CHECK(frag.objective.constant == 5.0);
    CHECK(frag.objective.terms.empty());
    p.set_objective(frag.objective);
    CHECK(mip::branch_and_bound(p).objective == 5.0);
  }
  SUBCASE("errors") {
    const Forest stump = stump_forest(3.5, 10.0, 20.0);
    mip::MipProblem p;
    const int y = p.add_variable("y", mip::VarKind::Continuous, 0, mip::kInf);
    std::vector<std::optional<double>> fixed(1);
    std::vector<int> vars{y};
    CHECK_THROWS_AS(encode(stump, fixed, vars, p), std::invalid_argument);
    std::vector<int> none{-1};
    CHECK_THROWS_AS(encode(stump, fixed, none, p), std::invalid_argument);
    EncoderConfig bad;
    bad.epsilon_strict = 0.0;
    CHECK_THROWS_AS(encode(stump, fixed, vars, p, bad), std::invalid_argument);
  }
}

TEST_CASE("fixed decisions reproduce predict") {
  const World w = make_world(7, 2, 2, 3, 3, 150);
  Rng rng(8);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t row = rng.index(w.data.size());
    const std::vector<double>& exo = w.exogenous[row];
    FeatureMip m = build_feature_mip(w.inst, w.forest, exo);
    Decision d = random_decision(rng, w.inst);
    for (double& u : d.u_hat.data()) u = 5.0 + 2.5 * static_cast<double>(rng.integer(0, 8));
    if (trial % 3 == 0) {
      const auto& f = w.data.features[row];
      for (std::size_t q = 0; q < d.x.size(); ++q) d.x[q] = static_cast<int>(f[3 + q]);
      for (std::size_t q = 0; q < d.u_hat.data().size(); ++q) d.u_hat.data()[q] = f[3 + d.x.size() + q];
    }
    const std::vector<double> features = feature_vector(w.forest.schema, exo, d);
    const double expected = w.forest.predict(features);

    std::vector<std::pair<int, double>> fix;
    for (std::size_t q = 0; q < m.x.size(); ++q) fix.emplace_back(m.x[q], d.x[q]);
    for (std::size_t q = 0; q < m.u_hat.size(); ++q) fix.emplace_back(m.u_hat[q], d.u_hat.data()[q]);
    const auto sol = mip::branch_and_bound(mip::fix_variables(m.problem, fix));
    REQUIRE(sol.status == mip::SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-9));

    // The traced q-assignment is feasible and scores the same.
    std::vector<double> values(static_cast<std::size_t>(m.problem.num_variables()), 0.0);
    for (const auto& [v, val] : fix) values[static_cast<std::size_t>(v)] = val;
    for (const auto& [v, val] : m.fragment.q_assignment(features)) values[static_cast<std::size_t>(v)] = val;
    CHECK(m.problem.max_violation(values) <= 1e-9);
    CHECK(m.problem.objective().evaluate(values) == doctest::Approx(expected).epsilon(1e-9));
    for (std::size_t h = 0; h < m.fragment.trees.size(); ++h)
      if (!m.fragment.q[h].empty()) CHECK(leaf_sum(m.fragment, h, sol.values) == doctest::Approx(1.0));
  }
}

TEST_CASE("free decisions reach the grid maximum") {
  TrainConfig cfg;
  cfg.n_trees = 10;
  const World w = make_world(9, 1, 2, 2, 2, 120, cfg);
  const std::vector<double> exo = w.exogenous[0];
  const std::vector<double> grid{5.0, 15.0, 25.0};
  FeatureMip m = build_feature_mip(w.inst, w.forest, exo);
  // Restrict each fare to the grid through selection binaries.
  for (std::size_t c = 0; c < m.u_hat.size(); ++c) {
    std::vector<mip::Term> pick, link{{m.u_hat[c], 1.0}};
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const int b = m.problem.add_variable("pick" + std::to_string(c) + "_" + std::to_string(g),
                                           mip::VarKind::Binary, 0, 1);
      pick.push_back({b, 1.0});
      link.push_back({b, -grid[g]});
    }
    m.problem.add_constraint("pick" + std::to_string(c), pick, mip::Relation::Equal, 1.0);
    m.problem.add_constraint("link" + std::to_string(c), link, mip::Relation::Equal, 0.0);
  }
  double best = -1e300;
  long count = 0;
  oracle::for_each_allocation(w.inst, [&](const Decision& base) {
    Decision d = base;
    const std::size_t cells = d.u_hat.data().size();
    for (std::size_t code = 0; code < static_cast<std::size_t>(std::pow(3, cells)); ++code) {
      std::size_t c = code;
      for (std::size_t q = 0; q < cells; ++q, c /= 3) d.u_hat.data()[q] = grid[c % 3];
      best = std::max(best, w.forest.predict(feature_vector(w.forest.schema, exo, d)));
      ++count;
    }
  });
  CHECK(count <= 2000);
  const auto sol = mip::branch_and_bound(m.problem);
  REQUIRE(sol.status == mip::SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(best).epsilon(1e-9));
  const Decision d = decision_from_feature_solution(w.inst, m, sol.values);
  CHECK(check_feasible(w.inst, d).empty());
  CHECK(w.forest.predict(feature_vector(w.forest.schema, exo, d)) == doctest::Approx(sol.objective).epsilon(1e-9));
}

TEST_CASE("pruned and bound-fixed encodings agree") {
  TrainConfig cfg;
  cfg.n_trees = 4;
  cfg.max_depth = 4;
  for (int trial = 0; trial < 20; ++trial) {
    const World w = make_world(100 + static_cast<std::uint64_t>(trial), 1, 2, 1, 2, 60, cfg);
    Rng rng(200 + static_cast<std::uint64_t>(trial));
    const std::vector<double> exo{rng.uniform(-5, 30), rng.uniform(-10, 20), static_cast<double>(rng.integer(0, 6))};

    const FeatureMip pruned = build_feature_mip(w.inst, w.forest, exo);

    // Same model with the exogenous block as variables fixed through bounds.
    FeatureMip full = build_feature_mip(w.inst, w.forest, exo);
    mip::MipProblem p;
    std::vector<int> vars;
    for (std::size_t f = 0; f < 3; ++f)
      vars.push_back(p.add_variable("c" + std::to_string(f), mip::VarKind::Continuous, exo[f], exo[f]));
    for (const auto& v : full.problem.variables()) {
      if (v.name.rfind("q[", 0) == 0) break;
      vars.push_back(p.add_variable(v.name, v.kind, v.lower, v.upper));
    }
    for (const auto& c : full.problem.constraints()) {
      if (c.name.rfind("rf_", 0) == 0) break;
      std::vector<mip::Term> terms;
      for (const auto& t : c.terms) terms.push_back({vars[3 + static_cast<std::size_t>(t.var)], t.coef});
      p.add_constraint(c.name, terms, c.relation, c.rhs);
    }
    std::vector<std::optional<double>> nothing(w.forest.schema.size());
    const MipFragment frag = encode(w.forest, nothing, vars, p);
    p.set_objective(frag.objective);
    CHECK(frag.num_q >= pruned.fragment.num_q);

    const auto a = mip::branch_and_bound(pruned.problem);
    const auto b = mip::branch_and_bound(p);
    REQUIRE(a.status == mip::SolveStatus::Optimal);
    REQUIRE(b.status == mip::SolveStatus::Optimal);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));

    EncoderConfig global;
    global.big_m_mode = EncoderConfig::BigM::Global;
    global.global_m = 1000.0;
    global.epsilon_strict = 0.01;
    const FeatureMip g = build_feature_mip(w.inst, w.forest, exo, global);
    CHECK(mip::branch_and_bound(g.problem).objective == doctest::Approx(a.objective).epsilon(1e-9));
  }
}
