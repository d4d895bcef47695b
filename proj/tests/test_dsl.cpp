#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "fleet_oracle.hpp"
#include "fleetopt/dsl/dsl.hpp"
#include "fleetopt/mip/branch_and_bound.hpp"

using namespace fleetopt;
using namespace fleetopt::dsl;
using namespace fixture;

namespace {

const char* const kFull = "maximize sum(i in I, j in J, k in K) (k + 1) * x[i,j,k]";
const char* const kFiltered = "maximize sum(i in I, j in J, k in K if k > 0) (k + 1) * x[i,j,k]";

bool rejected_with(const Validation& v, const std::string& needle) {
  if (v.accepted) return false;
  for (const auto& d : v.diagnostics)
    if (d.message.find(needle) != std::string::npos) return true;
  return false;
}

// Allocation variables with supply rows, plus optional explicit fare variables.
struct AllocModel {
  mip::MipProblem problem;
  DecisionVars vars;
};

AllocModel alloc_model(const FleetInstance& inst, bool fares) {
  AllocModel m;
  const std::size_t I = inst.num_supply(), J = inst.num_demand(), K = inst.num_soc();
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        m.vars.x.push_back(m.problem.add_variable(x_name(i, j, k), mip::VarKind::Integer, 0, inst.supply(i, k)));
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<mip::Term> row;
      for (std::size_t j = 0; j < J; ++j) row.push_back({m.vars.x[(i * J + j) * K + k], 1.0});
      m.problem.add_constraint("supply", std::move(row), mip::Relation::LessEqual, inst.supply(i, k));
    }
  if (fares)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        m.vars.u_hat.push_back(
            m.problem.add_variable(u_hat_name(j, k), mip::VarKind::Continuous, inst.fare_min, inst.fare_max));
  return m;
}

// Best objective over every allocation and every grid fare combination.
double brute_force(const ObjectiveAst& ast, const FleetInstance& inst, const PriceGrid* grid) {
  const bool maximize = ast.sense == Sense::Maximize;
  double best = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  oracle::for_each_allocation(inst, [&](const Decision& base) {
    Decision d = base;
    const std::size_t cells = inst.num_demand() * inst.num_soc();
    std::function<void(std::size_t)> rec = [&](std::size_t c) {
      if (!grid || c == cells) {
        const double v = evaluate(ast, inst, d);
        best = maximize ? std::max(best, v) : std::min(best, v);
        return;
      }
      for (double g : grid->points[c]) {
        d.u_hat.data()[c] = g;
        rec(c + 1);
      }
    };
    rec(0);
  });
  return best;
}

double direct_matching(const FleetInstance& inst, const Decision& d) {
  const std::size_t I = inst.num_supply(), J = inst.num_demand(), K = inst.num_soc();
  double idle = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      idle += inst.supply(i, k);
      for (std::size_t j = 0; j < J; ++j) idle -= d.alloc(i, j, k);
    }
  double inventory = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) inventory += inst.supply(i, k);
  inventory /= static_cast<double>(I * K);
  double gap = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    double demand = 0.0, sent = 0.0;
    for (std::size_t k = 0; k < K; ++k) demand += inst.demand(j, k);
    demand /= static_cast<double>(K);
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t k = 0; k < K; ++k) sent += d.alloc(i, j, k);
    gap += std::fabs(demand - inventory - sent);
  }
  return idle + gap;
}

}  // namespace

TEST_CASE("parse examples") {
  SUBCASE("pre-allocated taxis") {
    const ObjectiveAst ast = parse("maximize sum(i in I, j in J, k in K) x[i,j,k]");
    CHECK(ast.sense == Sense::Maximize);
    REQUIRE(ast.body->kind == Expr::Kind::Sum);
    CHECK(ast.body->bindings.size() == 3);
    CHECK(ast.body->bindings[2].set == IndexSet::K);
    const Expr& body = *ast.body->children[0];
    CHECK(body.kind == Expr::Kind::Atom);
    CHECK(body.name == "x");
    CHECK(body.args.size() == 3);
  }
  SUBCASE("average travel price") {
    const ObjectiveAst ast = parse("minimize sum(j in J, k in K) u[j,k]");
    CHECK(ast.sense == Sense::Minimize);
    CHECK(ast.body->children[0]->name == "u");
  }
  SUBCASE("arity violation carries a position") {
    try {
      parse("maximize sum(i in I) x[i]");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(e.column() == 22);
      CHECK(std::string(e.what()).find("3 indices") != std::string::npos);
    }
  }
  SUBCASE("syntax errors") {
    CHECK_THROWS_AS(parse("sum(i in I) x[i,i,i]"), ParseError);
    CHECK_THROWS_AS(parse("maximize"), ParseError);
    CHECK_THROWS_AS(parse("maximize sum(i in Q) S[i,0]"), ParseError);
    CHECK_THROWS_AS(parse("maximize (1 + 2"), ParseError);
    CHECK_THROWS_AS(parse("maximize 1 $ 2"), ParseError);
    CHECK_THROWS_AS(parse("maximize 1 2"), ParseError);
    CHECK_THROWS_AS(parse("maximize x"), ParseError);
    CHECK_THROWS_AS(parse("maximize S[1.5, 0]"), ParseError);
  }
  SUBCASE("unbound index") {
    try {
      parse("maximize sum(i in I, j in J)\n  x[i,j,k]");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("unbound") != std::string::npos);
    }
  }
  SUBCASE("comprehension body binds at product level") {
    const ObjectiveAst ast = parse("maximize sum(k in K) k * 2 + 1");
    REQUIRE(ast.body->kind == Expr::Kind::Add);
    CHECK(ast.body->children[0]->kind == Expr::Kind::Sum);
  }
  SUBCASE("to_source round trip") {
    for (const auto& e : builtin_catalog()) {
      const ObjectiveAst a = parse(e.source);
      const ObjectiveAst b = parse(to_source(a));
      CHECK(to_source(a) == to_source(b));
    }
  }
}

TEST_CASE("safeguard") {
  Rng rng(11);
  const FleetInstance inst = random_instance(rng, 2, 2, 3, 3);
  SUBCASE("dispatching efficiency is accepted and nonlinear") {
    const Validation v = safeguard(parse("maximize sum(i in I, j in J, k in K) (u[j,k] - w[i,j]) * x[i,j,k]"), inst);
    CHECK(v.accepted);
    CHECK_FALSE(v.linear);
    CHECK(v.degree == 2);
  }
  SUBCASE("rejections") {
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I) y[i]"), inst), "unknown identifier"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I, j in J, k in K) x[i,j,k] * u[j,k] * u_hat[j,k]"), inst),
                        "degree 3"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I, j in J, k in K) x[i,j,k] * x[i,j,k] * x[i,j,k]"), inst),
                        "degree 3"));
    CHECK(rejected_with(safeguard(parse("minimize sum(j in J, k in K) abs(u[j,k] * x[0,j,k])"), inst), "affine"));
    CHECK(rejected_with(safeguard(parse("minimize sum(j in J, k in K) x[0,j,k] * abs(u[j,k])"), inst),
                        "non-constant"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I, j in J, k in K) x[j,i,k]"), inst), "expects I"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I, j in J, k in K if i < j) x[i,j,k]"), inst),
                        "comparison between"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I) sum(i in I) S[i,0]"), inst), "shadows"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I, i in I) S[i,0]"), inst), "duplicate"));
    CHECK(rejected_with(safeguard(parse("maximize S[0,3]"), inst), "out of range"));
    CHECK(rejected_with(safeguard(parse("maximize sum(i in I, j in J, k in K) x[i,j,k] * x[i,j,0]"), inst),
                        "two allocation"));
  }
  SUBCASE("index-dependent scaling of abs is allowed") {
    const Validation v = safeguard(parse("minimize sum(k in K) (k + 1) * abs(x[0,0,k] - 1)"), inst);
    CHECK(v.accepted);
    CHECK_FALSE(v.linear);
  }
  SUBCASE("abs over parameters only stays linear") {
    const Validation v = safeguard(parse("minimize sum(j in J) abs(z[j,0] - 3) * x[0,j,0]"), inst);
    CHECK(v.accepted);
    CHECK(v.linear);
  }
  SUBCASE("acceptance is stable under re-serialization") {
    for (const auto& e : builtin_catalog()) {
      const ObjectiveAst a = parse(e.source);
      const Validation v = safeguard(a, inst);
      REQUIRE(v.accepted);
      const Validation w = safeguard(parse(to_source(a)), inst);
      CHECK(w.accepted);
      CHECK(w.linear == v.linear);
    }
  }
}

TEST_CASE("canonicalize") {
  Rng rng(5);
  const FleetInstance inst = random_instance(rng, 2, 3, 3, 4);
  SUBCASE("filtered pair differs exactly by the k = 0 monomials") {
    const CanonicalForm full = canonicalize(parse(kFull), inst);
    const CanonicalForm filtered = canonicalize(parse(kFiltered), inst);
    Poly diff = full.poly;
    for (const auto& [mono, coef] : filtered.poly) {
      REQUIRE(diff.contains(mono));
      CHECK(diff[mono] == doctest::Approx(coef));
      diff.erase(mono);
    }
    CHECK(diff.size() == inst.num_supply() * inst.num_demand());
    for (const auto& [mono, coef] : diff) {
      REQUIRE(mono.size() == 1);
      CHECK(mono[0].c == 0);
      CHECK(coef == doctest::Approx(1.0));
    }
  }
  SUBCASE("(k + 1) x expands to coefficients 1, 2, 3") {
    const CanonicalForm f = canonicalize(parse(kFull), inst);
    for (const auto& [mono, coef] : f.poly) CHECK(coef == doctest::Approx(mono[0].c + 1));
    CHECK(f.poly.size() == 2 * 3 * 3);
  }
  SUBCASE("binding order, renaming and term order do not matter") {
    const auto a = canonicalize(parse("maximize sum(i in I, j in J, k in K) (k + 1) * x[i,j,k] + 3"), inst);
    const auto b = canonicalize(parse("maximize 3 + sum(k in K, j in J, a in I) x[a,j,k] * (1 + k)"), inst);
    const auto c = canonicalize(parse("maximize sum(q in K) sum(p in I) sum(r in J) (x[p,r,q] + q * x[p,r,q]) + 1 + 2"),
                                inst);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a.str() == b.str());
  }
  SUBCASE("abs terms normalize sign and scale") {
    const auto a = canonicalize(parse("minimize abs(2 * x[0,0,0] - 4)"), inst);
    const auto b = canonicalize(parse("minimize 2 * abs(2 - x[0,0,0])"), inst);
    CHECK(a == b);
    REQUIRE(a.abs_terms.size() == 1);
    CHECK(a.abs_terms[0].coef == doctest::Approx(2.0));
  }
  SUBCASE("idempotent on the whole catalog") {
    for (const auto& e : builtin_catalog()) {
      const CanonicalForm f = canonicalize(parse(e.source), inst);
      const CanonicalForm g = canonicalize(parse(to_source(f)), inst);
      CHECK_MESSAGE(f == g, e.query);
    }
  }
  SUBCASE("empty index set") {
    FleetInstance empty = inst;
    empty.demand_areas.clear();
    CHECK_THROWS_AS(canonicalize(parse(kFull), empty), std::invalid_argument);
  }
  SUBCASE("rejected objective") {
    CHECK_THROWS_AS(canonicalize(parse("maximize sum(i in I) y[i]"), inst), std::invalid_argument);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("pre-allocated taxis counts allocations") {
    FleetInstance inst = tiny(2, 2, 2);
    inst.supply(0, 0) = 4;
    inst.supply(1, 1) = 3;
    Decision d(inst);
    d.alloc(0, 0, 0) = 2;
    d.alloc(0, 1, 0) = 2;
    d.alloc(1, 1, 1) = 3;
    CHECK(evaluate(parse("maximize sum(i in I, j in J, k in K) x[i,j,k]"), inst, d) == doctest::Approx(7.0));
  }
  SUBCASE("average travel price") {
    FleetInstance inst = tiny(1, 2, 3);
    Decision d(inst);
    for (double& u : d.u_hat.data()) u = 10.0;
    CHECK(evaluate(parse("minimize sum(j in J, k in K) u[j,k]"), inst, d) == doctest::Approx(42.0));
  }
  SUBCASE("supply-demand matching against direct summation") {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
      const FleetInstance inst = random_instance(rng, 1 + rng.index(3), 1 + rng.index(3), 1 + rng.index(3), 5);
      const Decision d = random_decision(rng, inst);
      const auto& entry = builtin_catalog()[11];
      REQUIRE(entry.query == "Supply-demand matching degree of taxis");
      CHECK(evaluate(parse(entry.source), inst, d) == doctest::Approx(direct_matching(inst, d)));
    }
  }
  SUBCASE("equals the canonical dot product") {
    Rng rng(8);
    for (int trial = 0; trial < 25; ++trial) {
      const FleetInstance inst = random_instance(rng, 1 + rng.index(3), 1 + rng.index(3), 1 + rng.index(4), 5);
      const Decision d = random_decision(rng, inst);
      for (const auto& e : builtin_catalog()) {
        const ObjectiveAst ast = parse(e.source);
        const double direct = evaluate(ast, inst, d, cascade_fulfill(inst, d));
        CHECK_MESSAGE(evaluate(canonicalize(ast, inst), d) == doctest::Approx(direct).epsilon(1e-9), e.query);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    const FleetInstance inst = tiny(2, 2, 2);
    CHECK_THROWS_AS(evaluate(parse(kFull), inst, Decision(tiny(1, 2, 2))), std::invalid_argument);
  }
}

TEST_CASE("lower_to_mip auxiliary counts") {
  Rng rng(21);
  const FleetInstance inst = random_instance(rng, 2, 2, 3, 3);
  SUBCASE("linear objective adds nothing") {
    AllocModel m = alloc_model(inst, true);
    const int vars = m.problem.num_variables(), rows = m.problem.num_constraints();
    const Lowered l = lower_to_mip(parse(kFull), inst, m.problem, m.vars);
    CHECK(l.stats.aux_variables == 0);
    CHECK(m.problem.num_variables() == vars);
    CHECK(m.problem.num_constraints() == rows);
    CHECK(l.objective.terms.size() == 12);
  }
  SUBCASE("one abs term adds one auxiliary and two rows") {
    AllocModel m = alloc_model(inst, true);
    const int vars = m.problem.num_variables(), rows = m.problem.num_constraints();
    const Lowered l = lower_to_mip(parse("minimize abs(sum(i in I) x[i,0,0] - 2)"), inst, m.problem, m.vars);
    CHECK(l.stats.abs_auxiliaries == 1);
    CHECK(m.problem.num_variables() == vars + 1);
    CHECK(m.problem.num_constraints() == rows + 2);
  }
  SUBCASE("market share adds p products per selected pair") {
    AllocModel m = alloc_model(inst, true);
    LowerOptions opt;
    opt.grid_points = 5;
    const Lowered l = lower_to_mip(parse(builtin_catalog()[17].source), inst, m.problem, m.vars, opt);
    CHECK(l.stats.product_auxiliaries == 5 * 12);
    CHECK(l.stats.grid_binaries == 5 * 6);
  }
  SUBCASE("products of allocations are not representable") {
    AllocModel m = alloc_model(inst, true);
    CHECK_THROWS_AS(lower_to_mip(parse("maximize x[0,0,0] * x[1,0,0]"), inst, m.problem, m.vars),
                    std::invalid_argument);
  }
}

TEST_CASE("lowered objectives reach the enumerated optimum") {
  Rng rng(31);
  const FleetInstance inst = random_instance(rng, 2, 1, 2, 2);
  const PriceGrid grid = uniform_price_grid(inst, 3);
  SUBCASE("grid binaries of the cascade model") {
    for (const char* src : {"maximize sum(i in I, j in J, k in K) u[j,k] * x[i,j,k]",
                            "maximize sum(i in I, j in J, k in K) (u[j,k] - w[i,j]) * x[i,j,k]",
                            "minimize sum(j in J, k in K) u_hat[j,k] * (1 + k) - sum(i in I, j in J, k in K) x[i,j,k]"}) {
      DeterministicMip model = build_deterministic_mip(inst, grid);
      DecisionVars vars;
      vars.x = model.x;
      vars.price_choice.resize(model.rho.size());
      for (std::size_t c = 0; c < model.rho.size(); ++c)
        for (std::size_t p = 0; p < model.rho[c].size(); ++p)
          vars.price_choice[c].emplace_back(model.rho[c][p], grid.points[c][p]);
      const ObjectiveAst ast = parse(src);
      const Lowered l = lower_to_mip(ast, inst, model.problem, vars);
      CHECK(l.stats.grid_binaries == 0);
      model.problem.set_objective(l.objective);
      const mip::Solution sol = mip::branch_and_bound(model.problem);
      REQUIRE(sol.status == mip::SolveStatus::Optimal);
      const double expected = brute_force(ast, inst, &grid);
      CHECK_MESSAGE(sol.objective == doctest::Approx(expected).epsilon(1e-7), src);
      const Decision d = decision_from_solution(inst, model, sol.values);
      CHECK(evaluate(ast, inst, d) == doctest::Approx(sol.objective).epsilon(1e-7));
    }
  }
  SUBCASE("explicit fares with an on-demand grid") {
    const ObjectiveAst ast = parse("maximize sum(i in I, j in J, k in K) (u[j,k] - w[i,j]) * x[i,j,k]");
    AllocModel m = alloc_model(inst, true);
    LowerOptions opt;
    opt.grid_points = 3;
    const Lowered l = lower_to_mip(ast, inst, m.problem, m.vars, opt);
    m.problem.set_objective(l.objective);
    const mip::Solution sol = mip::branch_and_bound(m.problem);
    REQUIRE(sol.status == mip::SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(brute_force(ast, inst, &grid)).epsilon(1e-7));
  }
  SUBCASE("convex and nonconvex abs") {
    for (const char* src : {builtin_catalog()[11].source.c_str(),
                            "maximize sum(j in J) abs(sum(i in I, k in K) x[i,j,k] - 2)",
                            "minimize 0 - abs(x[0,0,0] + x[1,0,1] - 1) + sum(i in I, k in K) x[i,0,k]"}) {
      const ObjectiveAst ast = parse(src);
      AllocModel m = alloc_model(inst, false);
      const Lowered l = lower_to_mip(ast, inst, m.problem, m.vars);
      m.problem.set_objective(l.objective);
      const mip::Solution sol = mip::branch_and_bound(m.problem);
      REQUIRE(sol.status == mip::SolveStatus::Optimal);
      CHECK_MESSAGE(sol.objective == doctest::Approx(brute_force(ast, inst, nullptr)).epsilon(1e-7), src);
    }
  }
}

TEST_CASE("jaro_winkler") {
  CHECK(jaro_winkler("MARTHA", "MARHTA") == doctest::Approx(0.9611).epsilon(1e-4));
  CHECK(jaro_winkler("DWAYNE", "DUANE") == doctest::Approx(0.8400).epsilon(1e-4));
  CHECK(jaro_winkler("DIXON", "DICKSONX") == doctest::Approx(0.8133).epsilon(1e-4));
  CHECK(jaro_winkler("", "") == 1.0);
  CHECK(jaro_winkler("", "a") == 0.0);
  CHECK(jaro_winkler("abc", "abc") == 1.0);
  CHECK(jaro_winkler("abc", "xyz") == 0.0);
  Rng rng(2);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string a, b;
    const std::size_t la = rng.index(8), lb = rng.index(8);
    for (std::size_t q = 0; q < la; ++q) a += static_cast<char>('a' + rng.index(3));
    for (std::size_t q = 0; q < lb; ++q) b += static_cast<char>('a' + rng.index(3));
    const double s = jaro_winkler(a, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(s == doctest::Approx(jaro_winkler(b, a)).epsilon(1e-12));
    CHECK((s == 1.0) == (a == b));
  }
}

TEST_CASE("similarity metrics") {
  Rng rng(4);
  const FleetInstance inst = random_instance(rng, 2, 2, 3, 3);
  SUBCASE("identical sources") {
    const auto& e = builtin_catalog()[0];
    CHECK(text_similarity(e.source, e.source) == 1.0);
    CHECK(result_similarity(parse(e.source), parse(e.source), inst) == 1.0);
  }
  SUBCASE("whitespace is normalized") {
    CHECK(normalize_whitespace("  a \n\t b  ") == "a b");
    CHECK(text_similarity("maximize  sum(i in I)\n S[i,0]", "maximize sum(i in I) S[i,0]") == 1.0);
  }
  SUBCASE("equivalent rewrite") {
    const char* rewrite = "maximize sum(k in K, j in J, i in I) x[i,j,k] + sum(i in I, j in J, k in K) k * x[i,j,k]";
    CHECK(result_similarity(parse(rewrite), parse(kFull), inst) == 1.0);
    CHECK(equivalent(parse(rewrite), parse(kFull), inst));
    CHECK(text_similarity(rewrite, kFull) < 1.0);
  }
  SUBCASE("filtered variant") {
    CHECK(result_similarity(parse(kFiltered), parse(kFull), inst) < 1.0);
    CHECK_FALSE(equivalent(parse(kFiltered), parse(kFull), inst));
  }
  SUBCASE("validation failures propagate") {
    CHECK_THROWS_AS(result_similarity(parse("maximize sum(i in I) y[i]"), parse(kFull), inst), std::invalid_argument);
  }
}

TEST_CASE("catalog") {
  const auto& cat = builtin_catalog();
  REQUIRE(cat.size() == 18);
  int linear = 0;
  for (const auto& e : cat) linear += e.linear ? 1 : 0;
  CHECK(linear == 15);
  CHECK(cat[6].source == cat[7].source);

  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const FleetInstance inst = random_instance(rng, 1 + rng.index(3), 1 + rng.index(3), 1 + rng.index(4), 3);
    for (const auto& e : cat) {
      const ObjectiveAst ast = parse(e.source);
      const Validation v = safeguard(ast, inst);
      CHECK_MESSAGE(v.accepted, e.query << ": " << v.report());
      CHECK_MESSAGE(v.linear == e.linear, e.query);
      const Decision d = random_decision(rng, inst);
      CHECK(std::isfinite(evaluate(ast, inst, d)));
      AllocModel m = alloc_model(inst, true);
      const Lowered l = lower_to_mip(ast, inst, m.problem, m.vars);
      CHECK(l.objective.sense == ast.sense);
      if (e.linear) CHECK(l.stats.aux_variables == 0);
      m.problem.validate();
    }
  }

  SUBCASE("json round trip and the shipped data file") {
    const auto back = catalog_from_json(catalog_to_json(cat));
    REQUIRE(back.size() == cat.size());
    for (std::size_t q = 0; q < cat.size(); ++q) {
      CHECK(back[q].query == cat[q].query);
      CHECK(back[q].source == cat[q].source);
      CHECK(back[q].linear == cat[q].linear);
      CHECK(back[q].paraphrases == cat[q].paraphrases);
    }
    std::ifstream in(FLEETOPT_SOURCE_DIR "/data/catalog.json");
    REQUIRE(in.good());
    CHECK(nlohmann::json::parse(in) == catalog_to_json(cat));
    CHECK_THROWS_AS(catalog_from_json(nlohmann::json{{"schema", "other"}}), FormatError);
  }
}
