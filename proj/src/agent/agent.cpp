#include "fleetopt/agent/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fleetopt/mip/branch_and_bound.hpp"

namespace fleetopt::agent {

mip::SolveConfig AgentConfig::default_solve() {
  mip::SolveConfig s;
  s.gap_tolerance = 1e-9;
  s.lex_relative_slack = 1e-9;
  return s;
}

double AgentConfig::fixed_fraction(int iteration) const {
  if (fixed_schedule.empty()) throw std::invalid_argument("agent: empty fixed-fraction schedule");
  const auto t = static_cast<std::size_t>(std::max(1, iteration) - 1);
  return fixed_schedule[std::min(t, fixed_schedule.size() - 1)];
}

void AgentConfig::validate() const {
  if (t_max < 1) throw std::invalid_argument("agent: t_max must be at least 1");
  if (few_shot < 0) throw std::invalid_argument("agent: few_shot must be non-negative");
  if (fixed_schedule.empty()) throw std::invalid_argument("agent: empty fixed-fraction schedule");
  for (double r : fixed_schedule)
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("agent: fixed fractions must lie in [0, 1]");
  encoder.validate();
}

double satisfaction_score(mip::Sense sense, double f_new, double f_hist) {
  const double gain = sense == mip::Sense::Maximize ? f_new - f_hist : f_hist - f_new;
  if (std::fabs(f_hist) < 1e-9) return gain;
  return gain / std::fabs(f_hist);
}

double satisfaction_score(const dsl::ObjectiveAst& objective, const FleetInstance& instance, const Decision& y_star,
                          const Decision& y_hist) {
  return satisfaction_score(objective.sense, dsl::evaluate(objective, instance, y_star),
                            dsl::evaluate(objective, instance, y_hist));
}

AgentModel build_agent_model(const FleetInstance& instance, const Forest& forest, std::span<const double> exogenous,
                             const dsl::ObjectiveAst& objective, const AgentConfig& config) {
  AgentModel m;
  m.feature = build_feature_mip(instance, forest, exogenous, config.encoder);
  m.vars.x = m.feature.x;
  m.vars.u_hat = m.feature.u_hat;
  m.lowered = dsl::lower_to_mip(objective, instance, m.feature.problem, m.vars, config.lower);
  m.feature.problem.set_secondary(m.lowered.objective);
  m.names = decision_variable_names(instance.num_supply(), instance.num_demand(), instance.num_soc());
  m.columns = m.feature.x;
  m.columns.insert(m.columns.end(), m.feature.u_hat.begin(), m.feature.u_hat.end());
  return m;
}

double fixed_value(const AgentModel& model, const HistoryStore& history, std::size_t v) {
  const VariableStats& s = history.stats.at(v);
  const mip::Variable& var = model.feature.problem.variable(model.columns.at(v));
  if (var.is_integral()) return std::clamp(std::floor(s.mean + 0.5), var.lower, var.upper);
  double value = std::clamp(s.mean, var.lower, var.upper);
  const std::size_t nx = model.feature.x.size();
  if (v >= nx && v - nx < model.vars.price_choice.size() && !model.vars.price_choice[v - nx].empty()) {
    double best = model.vars.price_choice[v - nx].front().second;
    for (const auto& [col, fare] : model.vars.price_choice[v - nx])
      if (std::fabs(fare - value) < std::fabs(best - value)) best = fare;
    value = best;
  }
  return value;
}

std::vector<std::pair<int, double>> fixing_for(const AgentModel& model, const HistoryStore& history,
                                               const std::vector<std::string>& active) {
  if (history.stats.size() != model.names.size()) throw std::invalid_argument("history does not match the model");
  std::vector<char> keep(model.names.size(), 0);
  for (const std::string& n : active) {
    const auto it = std::find(model.names.begin(), model.names.end(), n);
    if (it == model.names.end()) throw std::invalid_argument("unknown decision variable '" + n + "'");
    keep[static_cast<std::size_t>(it - model.names.begin())] = 1;
  }
  std::vector<std::pair<int, double>> out;
  for (std::size_t v = 0; v < model.names.size(); ++v)
    if (!keep[v]) out.emplace_back(model.columns[v], fixed_value(model, history, v));
  return out;
}

std::vector<std::string> fixing_conflicts(const AgentModel& model, const FleetInstance& instance,
                                          const std::vector<std::pair<int, double>>& fixing,
                                          std::vector<std::string>* involved) {
  const std::size_t I = instance.num_supply(), J = instance.num_demand(), K = instance.num_soc();
  std::vector<double> value(model.feature.x.size(), 0.0);
  std::vector<char> fixed(model.feature.x.size(), 0);
  for (const auto& [col, v] : fixing)
    for (std::size_t q = 0; q < model.feature.x.size(); ++q)
      if (model.feature.x[q] == col) {
        value[q] = v;
        fixed[q] = 1;
      }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      double total = 0.0;
      for (std::size_t j = 0; j < J; ++j) total += value[(i * J + j) * K + k];
      if (total <= instance.supply(i, k) + 1e-9) continue;
      char buf[160];
      std::snprintf(buf, sizeof buf, "supply[%zu,%zu]: fixed allocations sum to %g but only %d taxis are idle", i, k,
                    total, instance.supply(i, k));
      out.emplace_back(buf);
      if (involved)
        for (std::size_t j = 0; j < J; ++j)
          if (fixed[(i * J + j) * K + k]) involved->push_back(x_name(i, j, k));
    }
  return out;
}

SolvedModel solve_fixed(const AgentModel& model, const FleetInstance& instance, const dsl::ObjectiveAst& objective,
                        const std::vector<std::pair<int, double>>& fixing, const mip::SolveConfig& config) {
  SolvedModel out;
  const mip::MipProblem problem = fix_variables(model.feature.problem, fixing);
  out.solution = mip::lexicographic_solve(problem, config);
  if (!out.solution.has_solution()) return out;
  out.decision = decision_from_feature_solution(instance, model.feature, out.solution.values);
  out.g = out.solution.objective;
  out.f = dsl::evaluate(objective, instance, out.decision);
  return out;
}

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const std::string& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

}  // namespace

IterationRecord agent_step(const AgentModel& model, const FleetInstance& instance, const dsl::ObjectiveAst& objective,
                           const HistoryStore& history, Guide& guide, GuideContext ctx, const mip::SolveConfig& solve,
                           double f_hist) {
  IterationRecord rec;
  rec.t = ctx.iteration;
  auto note = [&rec](const GuideProposal& p, const std::string& who) {
    for (const std::string& w : p.warnings) rec.events.push_back(who + ": " + w);
    if (p.fell_back) rec.events.push_back(who + ": fell back to the deterministic guide");
    if (p.attempts > 1) rec.events.push_back(who + ": " + std::to_string(p.attempts) + " attempts");
  };
  GuideProposal proposal = guide.propose(ctx);
  note(proposal, guide.name());
  std::vector<std::pair<int, double>> fixing = fixing_for(model, history, proposal.active);
  std::vector<std::string> involved;
  std::vector<std::string> conflicts = fixing_conflicts(model, instance, fixing, &involved);
  if (!conflicts.empty()) {
    rec.events.push_back("infeasible fixing: " + join(conflicts, "; "));
    ctx.infeasibility_report = join(conflicts, "\n");
    ctx.report_variables = involved;
    proposal = guide.propose(ctx);
    note(proposal, guide.name() + " (re-prompt)");
    fixing = fixing_for(model, history, proposal.active);
    conflicts = fixing_conflicts(model, instance, fixing);
  }
  if (!conflicts.empty()) {
    rec.events.push_back("re-prompt still infeasible; deterministic fallback");
    proposal = DeterministicGuide().propose(ctx);
    fixing = fixing_for(model, history, proposal.active);
    conflicts = fixing_conflicts(model, instance, fixing);
  }
  if (!conflicts.empty()) {
    rec.events.push_back("fallback still infeasible; all variables active");
    proposal.active = model.names;
    fixing.clear();
  }

  SolvedModel solved = solve_fixed(model, instance, objective, fixing, solve);
  double seconds = solved.solution.wall_seconds;
  if (!solved.solution.has_solution() && !fixing.empty()) {
    rec.events.push_back(std::string("solver returned ") + mip::to_string(solved.solution.status) +
                         "; all variables active");
    proposal.active = model.names;
    fixing.clear();
    solved = solve_fixed(model, instance, objective, fixing, solve);
    seconds += solved.solution.wall_seconds;
  }
  if (!solved.solution.has_solution())
    throw std::runtime_error(std::string("agent: full model returned ") + mip::to_string(solved.solution.status));

  rec.active = proposal.active;
  for (const auto& [col, v] : fixing) {
    const auto pos = std::find(model.columns.begin(), model.columns.end(), col) - model.columns.begin();
    rec.fixed.emplace_back(model.names[static_cast<std::size_t>(pos)], v);
  }
  rec.status = mip::to_string(solved.solution.status);
  rec.decision = solved.decision;
  rec.g = solved.g;
  rec.f = solved.f;
  rec.score = satisfaction_score(objective.sense, solved.f, f_hist);
  rec.nodes = solved.solution.nodes;
  rec.wall_seconds = seconds;
  return rec;
}

AgentTrace run_agent(const Query& query, const dsl::ObjectiveAst& objective, const FleetInstance& instance,
                     std::span<const double> exogenous, const Forest& forest, const HistoryStore& history,
                     Guide& guide, const AgentConfig& config) {
  query.validate();
  config.validate();
  if (history.records.empty() || history.stats.empty()) throw std::invalid_argument("run_agent: empty history");
  const AgentModel model = build_agent_model(instance, forest, exogenous, objective, config);
  if (history.stats.size() != model.names.size()) throw std::invalid_argument("run_agent: history does not match the instance");
  for (std::size_t v = 0; v < model.names.size(); ++v)
    if (history.stats[v].name != model.names[v]) throw std::invalid_argument("run_agent: history variable order differs");
  const dsl::CanonicalForm canonical = dsl::canonicalize(objective, instance);

  AgentTrace trace;
  trace.query = query.text;
  trace.objective_source = dsl::to_source(objective);
  trace.guide = guide.name();
  trace.baseline = baseline_decision(history, instance);
  trace.f_hist = dsl::evaluate(objective, instance, trace.baseline);

  for (int t = 1; t <= config.t_max; ++t) {
    GuideContext ctx;
    ctx.query = query.text;
    ctx.objective = &objective;
    ctx.canonical = &canonical;
    ctx.history = &history;
    ctx.iteration = t;
    ctx.fixed_fraction = config.fixed_fraction(t);
    if (!trace.iterations.empty()) {
      ctx.previous_active = trace.iterations.back().active;
      ctx.previous_score = trace.iterations.back().score;
    }
    trace.iterations.push_back(agent_step(model, instance, objective, history, guide, ctx, config.solve, trace.f_hist));
    const std::size_t n = trace.iterations.size();
    if (n >= 2 && !(trace.iterations[n - 1].score > trace.iterations[n - 2].score)) break;
  }

  trace.best = 0;
  for (std::size_t i = 1; i < trace.iterations.size(); ++i)
    if (trace.iterations[i].score > trace.iterations[trace.best].score) trace.best = i;
  trace.y_best = trace.iterations[trace.best].decision;
  trace.s_best = trace.iterations[trace.best].score;
  return trace;
}

nlohmann::json AgentTrace::to_json(bool with_timing) const {
  nlohmann::json its = nlohmann::json::array();
  for (const IterationRecord& r : iterations) {
    nlohmann::json fixed = nlohmann::json::array();
    for (const auto& [n, v] : r.fixed) fixed.push_back({n, v});
    nlohmann::json item{{"t", r.t},       {"active", r.active}, {"fixed", fixed},     {"events", r.events},
                        {"status", r.status}, {"decision", decision_to_json(r.decision)},
                        {"g", r.g},       {"f", r.f},           {"score", r.score},   {"nodes", r.nodes}};
    if (with_timing) item["wall_seconds"] = r.wall_seconds;
    its.push_back(std::move(item));
  }
  return {{"schema", "fleetopt.trace/1"},
          {"query", query},
          {"objective", objective_source},
          {"guide", guide},
          {"f_hist", f_hist},
          {"baseline", decision_to_json(baseline)},
          {"iterations", its},
          {"best_iteration", iterations.empty() ? 0 : iterations[best].t},
          {"s_best", s_best},
          {"y_best", decision_to_json(y_best)}};
}

std::string response_format(const AgentTrace& trace, const FleetInstance& instance) {
  if (trace.iterations.empty()) throw std::invalid_argument("response_format: empty trace");
  std::string out;
  char buf[256];
  out += "Request: " + trace.query + "\n";
  out += "Objective: " + trace.objective_source + "\n";
  std::snprintf(buf, sizeof buf, "Iterations: %zu (best: iteration %d, guide: %s)\n", trace.iterations.size(),
                trace.iterations[trace.best].t, trace.guide.c_str());
  out += buf;
  const bool improved = trace.s_best > 0.0;
  const Decision& plan = improved ? trace.y_best : trace.baseline;
  if (improved) {
    std::snprintf(buf, sizeof buf, "Improvement over the historical baseline: %+.2f%%\n", 100.0 * trace.s_best);
  } else {
    std::snprintf(buf, sizeof buf,
                  "No iteration improved on the historical baseline (best score %+.2f%%); the historical plan is "
                  "retained.\n",
                  100.0 * trace.s_best);
  }
  out += buf;

  struct Move {
    int count;
    std::size_t i, j, k;
  };
  std::vector<Move> moves;
  for (std::size_t i = 0; i < plan.num_supply; ++i)
    for (std::size_t j = 0; j < plan.num_demand; ++j)
      for (std::size_t k = 0; k < plan.num_soc; ++k)
        if (plan.alloc(i, j, k) > 0) moves.push_back({plan.alloc(i, j, k), i, j, k});
  std::stable_sort(moves.begin(), moves.end(), [](const Move& a, const Move& b) { return a.count > b.count; });
  auto describe = [&](const Move& m) {
    std::snprintf(buf, sizeof buf, "%d taxi%s at SOC level %zu from area %d to area %d", m.count, m.count == 1 ? "" : "s",
                  m.k, instance.supply_areas[m.i], instance.demand_areas[m.j]);
    return std::string(buf);
  };
  if (moves.empty()) {
    out += "No taxis are moved.\n";
  } else if (moves.size() == 1) {
    out += "Move " + describe(moves[0]) + ".\n";
  } else {
    std::snprintf(buf, sizeof buf, "Top moves (%zu in total):\n", moves.size());
    out += buf;
    for (std::size_t m = 0; m < std::min<std::size_t>(5, moves.size()); ++m) out += "- " + describe(moves[m]) + "\n";
  }
  out += "Fares by demand area and SOC level:\n";
  for (std::size_t j = 0; j < plan.num_demand; ++j) {
    std::snprintf(buf, sizeof buf, "  area %d:", instance.demand_areas[j]);
    out += buf;
    for (std::size_t k = 0; k < plan.num_soc; ++k) {
      std::snprintf(buf, sizeof buf, " %.2f", plan.u_hat(j, k));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace fleetopt::agent
