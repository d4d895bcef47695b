// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. argv[1] is the fleetopt CLI, argv[2] a scratch
// directory, argv[3] an optional list of criterion ids.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "fleet_oracle.hpp"
#include "fleetopt/agent/agent.hpp"
#include "fleetopt/data/bench.hpp"
#include "fleetopt/mip/branch_and_bound.hpp"
#include "fleetopt/rf_encoder.hpp"
#include "oracles.hpp"

using namespace fleetopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}


// ---------------------------------------------------------------- 1

long allocation_count(const FleetInstance& inst) {
  long count = 1;
  const long J = static_cast<long>(inst.num_demand());
  for (int s : inst.supply.data()) {
    long c = 1;  // C(s + J, J)
    for (long q = 1; q <= J; ++q) c = c * (s + q) / q;
    count *= c;
    if (count > 1000000) return count;
  }
  return count;
}

Outcome cascade_equivalence() {
  Rng rng(101);
  int done = 0, mismatches = 0;
  long max_enum = 0;
  std::string first;
  while (done < 200) {
    const auto I = static_cast<std::size_t>(rng.integer(1, 5));
    const auto J = static_cast<std::size_t>(rng.integer(1, 3));
    FleetInstance inst = fixture::random_instance(rng, I, J, 3, 4);
    // Sparse supplies keep enumeration small.
    for (int& s : inst.supply.data())
      if (rng.uniform() < 0.5) s = 0;
    if (allocation_count(inst) > 20000) continue;
    ++done;
    const PriceGrid grid = uniform_price_grid(inst, 1);
    const DeterministicMip m = build_deterministic_mip(inst, grid);
    const mip::Solution sol = mip::branch_and_bound(m.problem);
    long count = 0;
    const double best = oracle::best_profit(inst, grid, &count);
    max_enum = std::max(max_enum, count);
    bool ok = sol.status == mip::SolveStatus::Optimal && std::fabs(sol.objective - best) <= 1e-6;
    if (ok) {
      const Decision dec = decision_from_solution(inst, m, sol.values);
      const FulfillmentState st = cascade_fulfill(inst, dec);
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < 3; ++k) {
          const double d = sol.values[static_cast<std::size_t>(m.d[j * 3 + k])];
          const double v = sol.values[static_cast<std::size_t>(m.v[j * 3 + k])];
          if (std::fabs(d - std::round(d)) > 1e-9 || std::lround(d) != st.d(j, k)) ok = false;
          if (std::fabs(v - std::round(v)) > 1e-9 || std::lround(v) != st.v(j, k)) ok = false;
        }
      if (std::fabs(profit(inst, dec) - best) > 1e-6) ok = false;
    }
    if (!ok) {
      ++mismatches;
      if (first.empty()) first = "; first mismatch at instance " + std::to_string(done);
    }
  }
  return {mismatches == 0, std::to_string(done) + " instances, " + std::to_string(mismatches) +
                               " mismatches, largest enumeration " + std::to_string(max_enum) + first};
}

// ---------------------------------------------------------------- 2, 5

mip::MipProblem random_mip(Rng& rng, int n, int m, bool binary, double* points) {
  mip::MipProblem p;
  std::vector<double> anchor;
  double space = 1.0;
  for (int j = 0; j < n; ++j) {
    double ub = binary ? 1.0 : static_cast<double>(rng.integer(1, 5));
    while (!binary && space * (ub + 1) > 2e5 && ub > 1) ub -= 1;
    space *= ub + 1;
    p.add_variable("v" + std::to_string(j), binary ? mip::VarKind::Binary : mip::VarKind::Integer, 0, ub);
    anchor.push_back(static_cast<double>(rng.integer(0, static_cast<std::int64_t>(ub))));
  }
  for (int i = 0; i < m; ++i) {
    std::vector<mip::Term> terms;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      if (rng.uniform() < 0.4) continue;
      const double a = binary ? static_cast<double>(rng.integer(1, 9)) : static_cast<double>(rng.integer(-4, 6));
      if (a == 0) continue;
      terms.push_back({j, a});
      act += a * anchor[static_cast<std::size_t>(j)];
    }
    if (terms.empty()) continue;
    const double r = rng.uniform();
    const std::string name = "r" + std::to_string(i);
    if (binary || r < 0.7) p.add_constraint(name, terms, mip::Relation::LessEqual, act + static_cast<double>(rng.integer(0, 4)));
    else if (r < 0.9) p.add_constraint(name, terms, mip::Relation::GreaterEqual, act - static_cast<double>(rng.integer(0, 3)));
    else p.add_constraint(name, terms, mip::Relation::Equal, act);
  }
  mip::Objective obj{rng.uniform() < 0.5 ? mip::Sense::Maximize : mip::Sense::Minimize, {}, 0.0};
  for (int j = 0; j < n; ++j)
    obj.terms.push_back({j, binary ? static_cast<double>(rng.integer(1, 12)) : static_cast<double>(rng.integer(-6, 9))});
  if (binary) obj.sense = mip::Sense::Maximize;
  p.set_objective(obj);
  if (points) *points = space;
  return p;
}

Outcome solver_vs_enumeration() {
  Rng rng(202);
  int mismatches = 0, invalid_cuts = 0;
  long gomory = 0, cover = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool binary = trial % 3 == 0;
    const int n = static_cast<int>(rng.integer(binary ? 8 : 4, 12));
    const mip::MipProblem p = random_mip(rng, n, static_cast<int>(rng.integer(2, 6)), binary, nullptr);
    const auto best = oracle::enumerate_best(p, p.objective());
    std::vector<std::vector<double>> points;
    oracle::for_each_feasible(p, [&](const std::vector<double>& x) { points.push_back(x); });
    for (int mode = 0; mode < 4; ++mode) {
      mip::SolveConfig cfg;
      cfg.cuts.gomory = mode & 1;
      cfg.cuts.cover = mode & 2;
      cfg.record_cuts = true;
      const mip::Solution s = mip::branch_and_bound(p, cfg);
      if (!best) {
        if (s.status != mip::SolveStatus::Infeasible) ++mismatches;
        continue;
      }
      if (s.status != mip::SolveStatus::Optimal || s.objective != best->value) ++mismatches;
      for (const mip::CutRow& c : s.cuts) {
        (c.family == "gomory" ? gomory : cover) += 1;
        for (const auto& x : points)
          if (c.violation(x) > 1e-7) {
            ++invalid_cuts;
            break;
          }
      }
    }
  }
  return {mismatches == 0 && invalid_cuts == 0 && gomory > 0 && cover > 0,
          "100 problems x 4 cut settings, " + std::to_string(mismatches) + " objective mismatches, " +
              std::to_string(gomory) + " Gomory and " + std::to_string(cover) + " cover cuts checked, " +
              std::to_string(invalid_cuts) + " invalid"};
}

Outcome lexicographic_contract() {
  Rng rng(505);
  const double eps = mip::SolveConfig{}.lex_relative_slack;
  int mismatches = 0, tried = 0;
  while (tried < 50) {
    mip::MipProblem p = random_mip(rng, static_cast<int>(rng.integer(3, 6)), static_cast<int>(rng.integer(2, 4)), false, nullptr);
    mip::Objective f{rng.uniform() < 0.5 ? mip::Sense::Maximize : mip::Sense::Minimize, {}, 0};
    for (int j = 0; j < p.num_variables(); ++j) f.terms.push_back({j, static_cast<double>(rng.integer(-5, 5))});
    p.set_secondary(f);
    const auto g = oracle::enumerate_best(p, p.objective());
    if (!g) continue;
    ++tried;
    std::optional<double> fbest;
    oracle::for_each_feasible(p, [&](const std::vector<double>& x) {
      if (p.objective().evaluate(x) != g->value) return;
      const double v = f.evaluate(x);
      if (!fbest || (f.sense == mip::Sense::Maximize ? v > *fbest : v < *fbest)) fbest = v;
    });
    const mip::Solution s = mip::lexicographic_solve(p);
    const bool max = p.objective().sense == mip::Sense::Maximize;
    const double slack = eps * std::max(1.0, std::fabs(g->value));
    bool ok = s.has_solution() && s.secondary_objective && *s.secondary_objective == *fbest;
    if (ok) ok = max ? s.objective >= g->value - slack : s.objective <= g->value + slack;
    if (!ok) ++mismatches;
  }
  return {mismatches == 0, "50 problems, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------- 3

struct ForestWorld {
  FleetInstance inst;
  Forest forest;
  std::vector<std::vector<double>> exogenous;
};

ForestWorld forest_world(std::uint64_t seed, std::size_t I, std::size_t J, std::size_t K, int max_supply, int rows) {
  Rng rng(seed);
  ForestWorld w;
  w.inst = fixture::random_instance(rng, I, J, K, max_supply);
  for (int& z : w.inst.demand.data()) z = static_cast<int>(rng.integer(1, 3));
  w.inst.fare_min = 5.0;
  w.inst.fare_max = 25.0;
  const FeatureSchema schema = make_schema({"temperature", "dew_point", "day_of_week"}, w.inst);
  Dataset data;
  for (int r = 0; r < rows; ++r) {
    std::vector<double> exo{rng.uniform(-5, 30), rng.uniform(-10, 20), static_cast<double>(rng.integer(0, 6))};
    Decision d = fixture::random_decision(rng, w.inst);
    for (double& u : d.u_hat.data()) u = 5.0 + 2.5 * static_cast<double>(rng.integer(0, 8));
    data.add(feature_vector(schema, exo, d), profit(w.inst, d) + 0.3 * exo[0] + rng.normal());
    w.exogenous.push_back(exo);
  }
  TrainConfig tc;
  tc.n_trees = 25;
  tc.max_depth = 6;
  tc.seed = seed;
  w.forest = train(schema, data, tc);
  return w;
}

Outcome encoder_fidelity() {
  std::string detail;
  bool pass = true;
  {
    const ForestWorld w = forest_world(303, 3, 2, 3, 3, 400);
    Rng rng(304);
    double worst = 0.0;
    int failed = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::vector<double>& exo = w.exogenous[rng.index(w.exogenous.size())];
      const FeatureMip m = build_feature_mip(w.inst, w.forest, exo);
      Decision d = fixture::random_decision(rng, w.inst);
      if (trial % 2) for (double& u : d.u_hat.data()) u = 5.0 + 2.5 * static_cast<double>(rng.integer(0, 8));
      std::vector<std::pair<int, double>> fix;
      for (std::size_t q = 0; q < m.x.size(); ++q) fix.emplace_back(m.x[q], d.x[q]);
      for (std::size_t q = 0; q < m.u_hat.size(); ++q) fix.emplace_back(m.u_hat[q], d.u_hat.data()[q]);
      const mip::Solution s = mip::branch_and_bound(mip::fix_variables(m.problem, fix));
      if (s.status != mip::SolveStatus::Optimal) {
        ++failed;
        continue;
      }
      worst = std::max(worst, std::fabs(s.objective - w.forest.predict(feature_vector(w.forest.schema, exo, d))));
    }
    pass = pass && failed == 0 && worst <= 1e-6;
    detail = "fixed: 50 decisions, max |MIP - predict| " + fmt("%.2e", worst) + ", " + std::to_string(failed) + " unsolved";
  }
  {
    const ForestWorld w = forest_world(313, 1, 2, 2, 2, 400);
    const std::vector<double> grid{5.0, 15.0, 25.0};
    int instances = 0, mismatches = 0;
    long largest = 0;
    for (std::size_t e = 0; e < 5; ++e) {
      const std::vector<double>& exo = w.exogenous[e];
      FeatureMip m = build_feature_mip(w.inst, w.forest, exo);
      for (std::size_t c = 0; c < m.u_hat.size(); ++c) {
        std::vector<mip::Term> pick, link{{m.u_hat[c], 1.0}};
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const int b = m.problem.add_variable("pick" + std::to_string(c) + "_" + std::to_string(g), mip::VarKind::Binary, 0, 1);
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
        std::size_t combos = 1;
        for (std::size_t q = 0; q < cells; ++q) combos *= grid.size();
        for (std::size_t code = 0; code < combos; ++code) {
          std::size_t c = code;
          for (std::size_t q = 0; q < cells; ++q, c /= grid.size()) d.u_hat.data()[q] = grid[c % grid.size()];
          best = std::max(best, w.forest.predict(feature_vector(w.forest.schema, exo, d)));
          ++count;
        }
      });
      largest = std::max(largest, count);
      const mip::Solution s = mip::branch_and_bound(m.problem);
      ++instances;
      if (count > 2000 || s.status != mip::SolveStatus::Optimal || std::fabs(s.objective - best) > 1e-6) ++mismatches;
    }
    pass = pass && mismatches == 0;
    detail += "; grid: " + std::to_string(instances) + " feature vectors, largest grid " + std::to_string(largest) +
              ", " + std::to_string(mismatches) + " mismatches";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 4, 6, 9

const data::Workbench& desk_bench() {
  static const data::Workbench wb = data::prepare_workbench(data::SynthConfig{});
  return wb;
}

Outcome fixing_tradeoff() {
  const data::Workbench& wb = desk_bench();
  agent::DeterministicGuide guide;
  data::EfficiencyConfig cfg;
  const int n = static_cast<int>(wb.history.stats.size());
  cfg.fixed_counts = {n / 2};
  const data::EfficiencyReport r = data::run_efficiency_experiment(wb, data::default_bench_queries(), guide, cfg);
  std::vector<double> agent_t, full_t, rf;
  int failed = 0;
  double min_gap = 1e300;
  for (const auto& row : r.rows) {
    if (!row.error.empty()) {
      ++failed;
      continue;
    }
    agent_t.push_back(row.seconds_agent);
    full_t.push_back(row.seconds_full);
    rf.push_back(row.rf_gap_pct);
    min_gap = std::min(min_gap, row.rf_gap_pct);
  }
  double mean_rf = 0;
  for (double g : rf) mean_rf += g;
  mean_rf /= std::max<std::size_t>(1, rf.size());
  const double ma = median(agent_t), mf = median(full_t);
  const double reduction = mf > 0 ? 1.0 - ma / mf : 0.0;
  const bool pass = failed == 0 && rf.size() >= 20 && reduction >= 0.25 && mean_rf <= 5.0 && min_gap >= -1e-6;
  return {pass, std::to_string(rf.size()) + " cells with " + std::to_string(n / 2) + " of " + std::to_string(n) +
                    " variables fixed, median time " + fmt("%.3f", ma) + "s vs FULL " + fmt("%.3f", mf) +
                    "s (reduction " + fmt("%.1f", 100 * reduction) + "%), mean RF gap " + fmt("%.3f", mean_rf) +
                    "%, min RF gap " + fmt("%.2e", min_gap) + "%, " + std::to_string(failed) + " failed cells"};
}

Outcome cuts_harness() {
  const data::Workbench& wb = desk_bench();
  agent::DeterministicGuide guide;
  const data::CutsReport r = data::run_cuts_experiment(wb, data::default_bench_queries(), guide);
  int disagree = 0, failed = 0;
  for (const auto& row : r.rows) {
    if (!row.error.empty()) ++failed;
    else if (!row.objectives_agree) ++disagree;
    else
      for (const auto& run : row.full)
        if (run.primary != row.full.front().primary) ++disagree;
  }
  const std::string md = data::cuts_markdown(r);
  const bool layout = md.find("| Cuts name |") != std::string::npos && md.find("| Gomory cuts |") != std::string::npos &&
                      md.find("| Cover cuts |") != std::string::npos && md.find("Total average") != std::string::npos &&
                      md.find("Mean node delta") != std::string::npos && md.find("Mean time delta") != std::string::npos;
  return {disagree == 0 && failed == 0 && layout && !r.rows.empty(),
          std::to_string(r.rows.size()) + " cells x 4 settings, " + std::to_string(disagree) + " optimum changes, " +
              std::to_string(failed) + " failed cells, table layout " + (layout ? "present" : "missing")};
}

Outcome agent_contract() {
  const data::Workbench& wb = desk_bench();
  const auto& catalog = dsl::builtin_catalog();
  const std::vector<std::size_t> entries{0, 1, 3, 4, 12};
  int runs = 0, bad = 0;
  std::string first;
  for (std::size_t d : wb.eval_days)
    for (std::size_t e : entries) {
      ++runs;
      const data::DayInstance& day = wb.world.days[d];
      const dsl::ObjectiveAst ast = dsl::parse(catalog[e].source);
      agent::DeterministicGuide guide;
      agent::AgentConfig cfg;
      const agent::AgentTrace t = agent::run_agent(agent::Query{catalog[e].query, ""}, ast, day.instance, day.exogenous,
                                                   wb.forest, wb.history, guide, cfg);
      const agent::AgentModel model = agent::build_agent_model(day.instance, wb.forest, day.exogenous, ast, cfg);
      const double g_full = agent::solve_fixed(model, day.instance, ast, {}, cfg.solve).g;
      std::string why;
      const auto& it = t.iterations;
      if (it.empty() || static_cast<int>(it.size()) > cfg.t_max) why = "iteration count";
      for (std::size_t q = 1; q + 1 < it.size(); ++q)
        if (!(it[q].score > it[q - 1].score)) why = "score not increasing";
      if (it.size() >= 2 && static_cast<int>(it.size()) < cfg.t_max && it.back().score > it[it.size() - 2].score)
        why = "stopped while improving";
      double best = -1e300;
      for (const auto& r : it) {
        best = std::max(best, r.score);
        if (r.g > g_full + 1e-6) why = "g above FULL";
      }
      if (t.s_best != best || !(t.y_best == it[t.best].decision)) why = "best mismatch";
      const double s_again = agent::satisfaction_score(ast, day.instance, t.y_best, t.baseline);
      if (std::fabs(s_again - t.s_best) > 1e-9 * std::max(1.0, std::fabs(t.s_best))) why = "S_best not reproduced by y_best";
      if (!why.empty()) {
        ++bad;
        if (first.empty()) first = "; first violation: " + why + " (" + data::format_date(day.day) + ", entry " + std::to_string(e) + ")";
      }
    }
  return {runs >= 20 && bad == 0, std::to_string(runs) + " runs, " + std::to_string(bad) + " violations" + first};
}

// ---------------------------------------------------------------- 7

Outcome dsl_and_similarity() {
  const auto& catalog = dsl::builtin_catalog();
  Rng rng(707);
  const FleetInstance inst = fixture::random_instance(rng, 3, 2, 3, 4);
  int ok = 0;
  for (const auto& e : catalog) {
    try {
      const dsl::ObjectiveAst ast = dsl::parse(e.source);
      if (!dsl::safeguard(ast, inst).accepted) continue;
      if (!std::isfinite(dsl::evaluate(ast, inst, fixture::random_decision(rng, inst)))) continue;
      mip::MipProblem p;
      dsl::DecisionVars vars;
      const std::size_t I = inst.num_supply(), J = inst.num_demand(), K = inst.num_soc();
      for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t k = 0; k < K; ++k)
            vars.x.push_back(p.add_variable(x_name(i, j, k), mip::VarKind::Integer, 0, inst.supply(i, k)));
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < K; ++k)
          vars.u_hat.push_back(p.add_variable(u_hat_name(j, k), mip::VarKind::Continuous, inst.fare_min, inst.fare_max));
      dsl::lower_to_mip(ast, inst, p, vars);
      p.validate();
      ++ok;
    } catch (const std::exception&) {
    }
  }
  const char* full = "maximize sum(i in I, j in J, k in K) (k + 1) * x[i,j,k]";
  const char* rewrite = "maximize sum(k in K, j in J, i in I) x[i,j,k] + sum(i in I, j in J, k in K) k * x[i,j,k]";
  const char* filtered = "maximize sum(i in I, j in J, k in K if k > 0) (k + 1) * x[i,j,k]";
  const double rs_eq = dsl::result_similarity(dsl::parse(rewrite), dsl::parse(full), inst);
  const double rs_f = dsl::result_similarity(dsl::parse(filtered), dsl::parse(full), inst);
  const double jw1 = dsl::jaro_winkler("MARTHA", "MARHTA"), jw2 = dsl::jaro_winkler("DWAYNE", "DUANE");
  agent::DeterministicGuide guide;
  int verbatim = 0;
  for (const auto& e : catalog) {
    const agent::IndicatorResult r = agent::indicator_generate(agent::Query{e.query, ""}, guide, inst);
    if (dsl::result_similarity(r.ast, dsl::parse(e.source), inst) == 1.0) ++verbatim;
  }
  const bool pass = catalog.size() == 18 && ok == 18 && rs_eq == 1.0 && rs_f < 1.0 && std::fabs(jw1 - 0.9611) <= 1e-4 &&
                    std::fabs(jw2 - 0.8400) <= 1e-4 && verbatim == 18;
  return {pass, std::to_string(ok) + "/" + std::to_string(catalog.size()) + " catalog entries pass, rewrite " +
                    fmt("%.4f", rs_eq) + ", filtered " + fmt("%.4f", rs_f) + ", JW " + fmt("%.4f", jw1) + " and " +
                    fmt("%.4f", jw2) + ", verbatim queries at 1.0: " + std::to_string(verbatim)};
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome bench_determinism(const std::string& cli, const fs::path& scratch) {
  std::vector<fs::path> dirs{scratch / "efficiency_a", scratch / "efficiency_b"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    const std::string cmd = "\"" + cli + "\" bench efficiency --out \"" + d.string() + "\" > \"" + (scratch / "bench.log").string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "bench efficiency exited with an error"};
  }
  int same_files = 0;
  std::string diff;
  for (const char* f : {"efficiency.json", "efficiency.csv", "efficiency.md"}) {
    const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
    if (!a.empty() && a == b) ++same_files;
    else diff += std::string(" ") + f;
  }
  return {same_files == 3, std::to_string(same_files) + "/3 report files byte-identical" + (diff.empty() ? "" : "; differ:" + diff)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <fleetopt cli> <scratch dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "cascade/MIP equivalence", 60, cascade_equivalence},
      {2, "branch and bound vs enumeration, cut validity", 120, solver_vs_enumeration},
      {3, "forest encoder fidelity", 0, encoder_fidelity},
      {4, "variable fixing speed and quality", 600, fixing_tradeoff},
      {5, "lexicographic contract", 60, lexicographic_contract},
      {6, "cut toggles keep the proven optimum", 300, cuts_harness},
      {7, "DSL catalog and similarity", 0, dsl_and_similarity},
      {8, "bench efficiency determinism", 600, [&] { return bench_determinism(cli, scratch); }},
      {9, "agent loop contract", 0, agent_contract},
  };
  // Optional third argument: comma-separated criterion ids to run.
  std::vector<int> only;
  if (argc > 3) {
    std::stringstream ids(argv[3]);
    for (std::string id; std::getline(ids, id, ',');) only.push_back(std::stoi(id));
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_seconds <= 0 || secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    char limit[48] = "";
    if (c.limit_seconds > 0) std::snprintf(limit, sizeof limit, ", limit %.0fs%s", c.limit_seconds, in_time ? "" : " exceeded");
    std::printf("%s criterion %d (%s): %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                limit);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
