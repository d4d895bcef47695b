#include "fleetopt/data/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace fleetopt::data {

namespace {

using agent::AgentConfig;
using agent::AgentModel;
using agent::GuideContext;
using agent::IterationRecord;
using agent::SolvedModel;

std::string num(double v, const char* format = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::size_t num_variables(const FleetInstance& inst) {
  return inst.num_supply() * inst.num_demand() * inst.num_soc() + inst.num_demand() * inst.num_soc();
}

std::vector<int> default_counts(std::size_t n) {
  const int ni = static_cast<int>(n);
  return {0, ni / 4, ni / 2, 3 * ni / 4};
}

// Objective for a cell; throws on failure.
struct CellObjective {
  dsl::ObjectiveAst ast;
  std::string source;
  bool linear = true;
};

CellObjective cell_objective(const BenchQuery& q, agent::Guide& guide, const FleetInstance& inst, int few_shot) {
  const agent::IndicatorResult ir = agent::indicator_generate(agent::Query{q.text, "taxi"}, guide, inst, few_shot);
  CellObjective c;
  c.ast = ir.ast;
  c.source = dsl::to_source(ir.ast);
  c.linear = dsl::safeguard(ir.ast, inst).linear;
  return c;
}

GuideContext step_context(const BenchQuery& q, const dsl::ObjectiveAst& ast, const dsl::CanonicalForm& canonical,
                          const agent::HistoryStore& history, int fixed_count, std::size_t n) {
  GuideContext ctx;
  ctx.query = q.text;
  ctx.objective = &ast;
  ctx.canonical = &canonical;
  ctx.history = &history;
  ctx.iteration = 1;
  ctx.fixed_fraction = static_cast<double>(fixed_count) / static_cast<double>(n);
  return ctx;
}

const char* dash = "--";

}  // namespace

std::vector<BenchQuery> default_bench_queries() {
  const auto& cat = dsl::builtin_catalog();
  std::vector<BenchQuery> out;
  for (std::size_t e : {0, 2, 3, 4, 8, 12}) out.push_back({cat.at(e).query, true});
  for (std::size_t e : {1, 6}) out.push_back({cat.at(e).paraphrases.at(0), false});
  return out;
}

std::vector<BenchQuery> nonlinear_bench_queries() {
  std::vector<BenchQuery> out;
  for (const dsl::CatalogEntry& e : dsl::builtin_catalog())
    if (!e.linear) out.push_back({e.query, true});
  return out;
}

double objective_gap_pct(mip::Sense sense, double full, double agent_value) {
  const double diff = sense == mip::Sense::Maximize ? full - agent_value : agent_value - full;
  return 100.0 * (std::fabs(full) < 1e-9 ? diff : diff / std::fabs(full));
}

EfficiencyReport run_efficiency_experiment(const Workbench& bench, const std::vector<BenchQuery>& queries,
                                           agent::Guide& guide, const EfficiencyConfig& config) {
  if (bench.eval_days.empty() || queries.empty()) throw std::invalid_argument("efficiency: no cells");
  const std::size_t n = num_variables(bench.world.days.at(bench.eval_days.front()).instance);
  const std::vector<int> counts = config.fixed_counts.empty() ? default_counts(n) : config.fixed_counts;
  for (int c : counts)
    if (c < 0 || static_cast<std::size_t>(c) > n) throw std::invalid_argument("efficiency: fixed count out of range");
  AgentConfig acfg;
  acfg.solve = config.solve;
  acfg.encoder = config.encoder;
  acfg.lower = config.lower;

  EfficiencyReport report;
  report.num_variables = static_cast<int>(n);
  std::map<std::pair<std::size_t, std::string>, SolvedModel> full_cache;
  for (std::size_t d : bench.eval_days) {
    const DayInstance& day = bench.world.days.at(d);
    for (const BenchQuery& q : queries) {
      EfficiencyRow base;
      base.date = format_date(day.day);
      base.day_index = d;
      base.query = q.text;
      base.in_sample = q.in_sample;
      try {
        const CellObjective obj = cell_objective(q, guide, day.instance, config.few_shot);
        base.objective = obj.source;
        base.linear = obj.linear;
        const AgentModel model = agent::build_agent_model(day.instance, bench.forest, day.exogenous, obj.ast, acfg);
        const dsl::CanonicalForm canonical = dsl::canonicalize(obj.ast, day.instance);
        const double f_hist = dsl::evaluate(obj.ast, day.instance, agent::baseline_decision(bench.history, day.instance));
        const auto key = std::make_pair(d, obj.source);
        auto it = full_cache.find(key);
        if (it == full_cache.end())
          it = full_cache.emplace(key, agent::solve_fixed(model, day.instance, obj.ast, {}, config.solve)).first;
        const SolvedModel& full = it->second;
        if (full.solution.status != mip::SolveStatus::Optimal)
          throw std::runtime_error(std::string("FULL model returned ") + mip::to_string(full.solution.status));
        for (int c : counts) {
          EfficiencyRow row = base;
          row.fixed_count = c;
          try {
            const IterationRecord rec =
                agent::agent_step(model, day.instance, obj.ast, bench.history, guide,
                                  step_context(q, obj.ast, canonical, bench.history, c, n), config.solve, f_hist);
            row.fixed_actual = static_cast<int>(rec.fixed.size());
            row.status = rec.status;
            row.g_full = full.g;
            row.g_agent = rec.g;
            row.f_full = full.f;
            row.f_agent = rec.f;
            row.rf_gap_pct = objective_gap_pct(mip::Sense::Maximize, full.g, rec.g);
            row.qr_gap_pct = objective_gap_pct(obj.ast.sense, full.f, rec.f);
            row.nodes_full = full.solution.nodes;
            row.nodes_agent = rec.nodes;
            row.seconds_full = full.solution.wall_seconds;
            row.seconds_agent = rec.wall_seconds;
            row.events = rec.events;
          } catch (const std::exception& e) {
            row.error = e.what();
          }
          report.rows.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        for (int c : counts) {
          EfficiencyRow row = base;
          row.fixed_count = c;
          row.error = e.what();
          report.rows.push_back(row);
        }
      }
    }
  }
  report.aggregates = aggregate_efficiency(report.rows);
  return report;
}

std::vector<EfficiencyAggregate> aggregate_efficiency(const std::vector<EfficiencyRow>& rows) {
  struct Acc {
    std::vector<double> rf, qr, na, nf, sa, sf;
  };
  std::map<std::tuple<bool, int, bool>, Acc> groups;  // (!linear, count, !in_sample) orders linear and in-sample first
  for (const EfficiencyRow& r : rows) {
    if (!r.error.empty()) continue;
    Acc& a = groups[{!r.linear, r.fixed_count, !r.in_sample}];
    a.rf.push_back(r.rf_gap_pct);
    a.qr.push_back(r.qr_gap_pct);
    a.na.push_back(static_cast<double>(r.nodes_agent));
    a.nf.push_back(static_cast<double>(r.nodes_full));
    a.sa.push_back(r.seconds_agent);
    a.sf.push_back(r.seconds_full);
  }
  std::vector<EfficiencyAggregate> out;
  for (const auto& [key, a] : groups) {
    EfficiencyAggregate g;
    g.linear = !std::get<0>(key);
    g.fixed_count = std::get<1>(key);
    g.in_sample = !std::get<2>(key);
    g.cells = static_cast<int>(a.rf.size());
    g.mean_rf_gap_pct = mean(a.rf);
    g.mean_qr_gap_pct = mean(a.qr);
    g.mean_nodes_agent = mean(a.na);
    g.mean_nodes_full = mean(a.nf);
    g.mean_seconds_agent = mean(a.sa);
    g.mean_seconds_full = mean(a.sf);
    g.median_seconds_agent = median(a.sa);
    g.median_seconds_full = median(a.sf);
    out.push_back(g);
  }
  return out;
}

nlohmann::json efficiency_to_json(const EfficiencyReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const EfficiencyRow& r : report.rows) {
    nlohmann::json j{{"date", r.date},         {"query", r.query},           {"in_sample", r.in_sample},
                     {"objective", r.objective}, {"linear", r.linear},         {"fixed_count", r.fixed_count}};
    if (!r.error.empty()) {
      j["error"] = r.error;
    } else {
      j.update({{"fixed_actual", r.fixed_actual}, {"status", r.status},       {"g_full", r.g_full},
                {"g_agent", r.g_agent},           {"f_full", r.f_full},       {"f_agent", r.f_agent},
                {"rf_gap_pct", r.rf_gap_pct},     {"qr_gap_pct", r.qr_gap_pct}, {"nodes_full", r.nodes_full},
                {"nodes_agent", r.nodes_agent},   {"events", r.events}});
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json aggs = nlohmann::json::array();
  for (const EfficiencyAggregate& a : report.aggregates)
    aggs.push_back({{"linear", a.linear},
                    {"fixed_count", a.fixed_count},
                    {"in_sample", a.in_sample},
                    {"cells", a.cells},
                    {"mean_rf_gap_pct", a.mean_rf_gap_pct},
                    {"mean_qr_gap_pct", a.mean_qr_gap_pct},
                    {"mean_nodes_agent", a.mean_nodes_agent},
                    {"mean_nodes_full", a.mean_nodes_full}});
  return {{"schema", "fleetopt.bench.efficiency/1"},
          {"num_variables", report.num_variables},
          {"rows", rows},
          {"aggregates", aggs}};
}

namespace {

const EfficiencyAggregate* find_aggregate(const EfficiencyReport& r, bool linear, int count, bool in_sample) {
  for (const EfficiencyAggregate& a : r.aggregates)
    if (a.linear == linear && a.fixed_count == count && a.in_sample == in_sample) return &a;
  return nullptr;
}

std::vector<int> report_counts(const EfficiencyReport& r, bool linear) {
  std::vector<int> counts;
  for (const EfficiencyRow& row : r.rows)
    if (row.linear == linear && std::find(counts.begin(), counts.end(), row.fixed_count) == counts.end())
      counts.push_back(row.fixed_count);
  std::sort(counts.begin(), counts.end());
  return counts;
}

bool has_linear(const EfficiencyReport& r, bool linear) {
  return std::any_of(r.rows.begin(), r.rows.end(), [&](const EfficiencyRow& x) { return x.linear == linear; });
}

// Linear table: one line per fixed count, in-sample then out-of-sample halves.
template <typename Cols>
std::string linear_table(const EfficiencyReport& r, const std::string& effort, Cols cols) {
  std::string md = "| Fixed variables | In-sample RF-Obj gap (%) | In-sample QR-Obj gap (%) | In-sample agent " + effort +
                   " | In-sample FULL " + effort + " | Out-of-sample RF-Obj gap (%) | Out-of-sample QR-Obj gap (%) | " +
                   "Out-of-sample agent " + effort + " | Out-of-sample FULL " + effort + " |\n";
  md += "|---|---|---|---|---|---|---|---|---|\n";
  for (int c : report_counts(r, true)) {
    md += "| " + std::to_string(c) + " |";
    for (bool in : {true, false}) {
      const EfficiencyAggregate* a = find_aggregate(r, true, c, in);
      if (!a) {
        md += std::string(" ") + dash + " | " + dash + " | " + dash + " | " + dash + " |";
        continue;
      }
      const auto [agent_value, full_value] = cols(*a);
      md += " " + num(a->mean_rf_gap_pct, "%.2f") + " | " + num(a->mean_qr_gap_pct, "%.2f") + " | " + agent_value +
            " | " + full_value + " |";
    }
    md += "\n";
  }
  return md;
}

// Nonlinear table: one column group per query objective.
template <typename Cols>
std::string nonlinear_table(const EfficiencyReport& r, const std::string& effort, Cols cols) {
  std::vector<std::string> queries;
  for (const EfficiencyRow& row : r.rows)
    if (!row.linear && std::find(queries.begin(), queries.end(), row.query) == queries.end())
      queries.push_back(row.query);
  std::string md = "| Fixed variables |";
  std::string sep = "|---|";
  for (const std::string& q : queries) {
    md += " " + q + ": agent " + effort + " | FULL " + effort + " | RF-Obj gap (%) | QR-Obj gap (%) |";
    sep += "---|---|---|---|";
  }
  md += "\n" + sep + "\n";
  for (int c : report_counts(r, false)) {
    md += "| " + std::to_string(c) + " (" + num(100.0 * c / std::max(1, r.num_variables), "%.0f") + "%) |";
    for (const std::string& q : queries) {
      std::vector<const EfficiencyRow*> members;
      for (const EfficiencyRow& row : r.rows)
        if (!row.linear && row.query == q && row.fixed_count == c && row.error.empty()) members.push_back(&row);
      if (members.empty()) {
        md += std::string(" ") + dash + " | " + dash + " | " + dash + " | " + dash + " |";
        continue;
      }
      std::vector<double> rf, qr;
      for (const EfficiencyRow* m : members) {
        rf.push_back(m->rf_gap_pct);
        qr.push_back(m->qr_gap_pct);
      }
      const auto [agent_value, full_value] = cols(members);
      md += " " + agent_value + " | " + full_value + " | " + num(mean(rf), "%.2f") + " | " + num(mean(qr), "%.2f") + " |";
    }
    md += "\n";
  }
  return md;
}

std::string failures_md(const EfficiencyReport& r) {
  std::string md;
  for (const EfficiencyRow& row : r.rows)
    if (!row.error.empty())
      md += "- " + row.date + ", \"" + row.query + "\", " + std::to_string(row.fixed_count) + " fixed: " + row.error + "\n";
  return md.empty() ? "" : "\n## Failed cells\n\n" + md;
}

}  // namespace

std::string efficiency_markdown(const EfficiencyReport& r) {
  std::string md = "# Efficiency experiment\n\nDecision variables per instance: " + std::to_string(r.num_variables) +
                   ". Gaps are means over cells; effort is mean branch-and-bound nodes (both stages).\n";
  if (has_linear(r, true)) {
    md += "\n## Linear objectives\n\n";
    md += linear_table(r, "nodes", [](const EfficiencyAggregate& a) {
      return std::make_pair(num(a.mean_nodes_agent, "%.1f"), num(a.mean_nodes_full, "%.1f"));
    });
  }
  if (has_linear(r, false)) {
    md += "\n## Nonlinear objectives\n\n";
    md += nonlinear_table(r, "nodes", [](const std::vector<const EfficiencyRow*>& m) {
      std::vector<double> a, f;
      for (const EfficiencyRow* x : m) {
        a.push_back(static_cast<double>(x->nodes_agent));
        f.push_back(static_cast<double>(x->nodes_full));
      }
      return std::make_pair(num(mean(a), "%.1f"), num(mean(f), "%.1f"));
    });
  }
  return md + failures_md(r);
}

std::string efficiency_timings_markdown(const EfficiencyReport& r) {
  std::string md = "# Efficiency experiment: CPU time\n\nMean solver seconds per cell (both lexicographic stages).\n";
  if (has_linear(r, true)) {
    md += "\n## Linear objectives\n\n";
    md += linear_table(r, "CPU time (s)", [](const EfficiencyAggregate& a) {
      return std::make_pair(num(a.mean_seconds_agent, "%.3f"), num(a.mean_seconds_full, "%.3f"));
    });
    md += "\n| Fixed variables | Setting | Cells | Median agent (s) | Median FULL (s) | Median reduction (%) |\n"
          "|---|---|---|---|---|---|\n";
    for (const EfficiencyAggregate& a : r.aggregates) {
      if (!a.linear) continue;
      const double red = a.median_seconds_full > 0 ? 100.0 * (1.0 - a.median_seconds_agent / a.median_seconds_full) : 0.0;
      md += "| " + std::to_string(a.fixed_count) + " | " + (a.in_sample ? "in-sample" : "out-of-sample") + " | " +
            std::to_string(a.cells) + " | " + num(a.median_seconds_agent, "%.3f") + " | " +
            num(a.median_seconds_full, "%.3f") + " | " + num(red, "%.1f") + " |\n";
    }
  }
  if (has_linear(r, false)) {
    md += "\n## Nonlinear objectives\n\n";
    md += nonlinear_table(r, "CPU time (s)", [](const std::vector<const EfficiencyRow*>& m) {
      std::vector<double> a, f;
      for (const EfficiencyRow* x : m) {
        a.push_back(x->seconds_agent);
        f.push_back(x->seconds_full);
      }
      return std::make_pair(num(mean(a), "%.3f"), num(mean(f), "%.3f"));
    });
  }
  return md;
}

std::vector<std::filesystem::path> write_efficiency_report(const EfficiencyReport& report,
                                                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv =
      "date,query,in_sample,linear,fixed_count,fixed_actual,status,g_full,g_agent,f_full,f_agent,rf_gap_pct,"
      "qr_gap_pct,nodes_full,nodes_agent,error\n";
  std::string tcsv = "date,query,fixed_count,seconds_full,seconds_agent,time_gap_s,time_gap_pct\n";
  for (const EfficiencyRow& r : report.rows) {
    csv += r.date + "," + csv_field(r.query) + "," + (r.in_sample ? "1" : "0") + "," + (r.linear ? "1" : "0") + "," +
           std::to_string(r.fixed_count) + ",";
    if (r.error.empty()) {
      csv += std::to_string(r.fixed_actual) + "," + r.status + "," + num(r.g_full) + "," + num(r.g_agent) + "," +
             num(r.f_full) + "," + num(r.f_agent) + "," + num(r.rf_gap_pct) + "," + num(r.qr_gap_pct) + "," +
             std::to_string(r.nodes_full) + "," + std::to_string(r.nodes_agent) + ",\n";
      const double gap = r.seconds_full - r.seconds_agent;
      tcsv += r.date + "," + csv_field(r.query) + "," + std::to_string(r.fixed_count) + "," + num(r.seconds_full) + "," +
              num(r.seconds_agent) + "," + num(gap) + "," +
              num(r.seconds_full > 0 ? 100.0 * gap / r.seconds_full : 0.0, "%.2f") + "\n";
    } else {
      csv += ",,,,,,,,,," + csv_field(r.error) + "\n";
    }
  }
  const std::vector<std::filesystem::path> paths{dir / "efficiency.json", dir / "efficiency.csv",
                                                 dir / "efficiency.md", dir / "efficiency_timings.csv",
                                                 dir / "efficiency_timings.md"};
  write_file(paths[0], efficiency_to_json(report).dump(2) + "\n");
  write_file(paths[1], csv);
  write_file(paths[2], efficiency_markdown(report));
  write_file(paths[3], tcsv);
  write_file(paths[4], efficiency_timings_markdown(report));
  return paths;
}

CutsReport run_cuts_experiment(const Workbench& bench, const std::vector<BenchQuery>& queries, agent::Guide& guide,
                               const CutsConfig& config) {
  if (bench.eval_days.empty() || queries.empty()) throw std::invalid_argument("cuts: no cells");
  const std::size_t n = num_variables(bench.world.days.at(bench.eval_days.front()).instance);
  const int count = config.fixed_count < 0 ? static_cast<int>(n / 2) : config.fixed_count;
  if (static_cast<std::size_t>(count) > n) throw std::invalid_argument("cuts: fixed count out of range");
  struct Setting {
    const char* name;
    bool gomory, cover;
  };
  const Setting settings[] = {{"all", true, true}, {"no-gomory", false, true}, {"no-cover", true, false}, {"none", false, false}};
  AgentConfig acfg;
  acfg.solve = config.solve;
  acfg.encoder = config.encoder;
  acfg.lower = config.lower;

  CutsReport report;
  report.fixed_count = count;
  for (std::size_t d : bench.eval_days) {
    const DayInstance& day = bench.world.days.at(d);
    for (const BenchQuery& q : queries) {
      CutsRow row;
      row.date = format_date(day.day);
      row.day_index = d;
      row.query = q.text;
      row.in_sample = q.in_sample;
      try {
        const CellObjective obj = cell_objective(q, guide, day.instance, config.few_shot);
        row.objective = obj.source;
        const AgentModel model = agent::build_agent_model(day.instance, bench.forest, day.exogenous, obj.ast, acfg);
        for (const Setting& s : settings) {
          mip::SolveConfig sc = config.solve;
          sc.cuts.gomory = s.gomory;
          sc.cuts.cover = s.cover;
          const SolvedModel solved = agent::solve_fixed(model, day.instance, obj.ast, {}, sc);
          CutRun run;
          run.setting = s.name;
          run.status = mip::to_string(solved.solution.status);
          run.primary = solved.solution.primary_optimum.value_or(solved.g);
          run.secondary = solved.f;
          run.nodes = solved.solution.nodes;
          run.gomory_cuts = solved.solution.gomory_cuts;
          run.cover_cuts = solved.solution.cover_cuts;
          run.seconds = solved.solution.wall_seconds;
          if (solved.solution.status != mip::SolveStatus::Optimal) row.objectives_agree = false;
          row.full.push_back(run);
        }
        const double ref = row.full.front().primary;
        for (const CutRun& r : row.full)
          if (std::fabs(r.primary - ref) > 1e-9 * std::max(1.0, std::fabs(ref))) row.objectives_agree = false;

        mip::SolveConfig all = config.solve;
        all.cuts.gomory = all.cuts.cover = true;
        const dsl::CanonicalForm canonical = dsl::canonicalize(obj.ast, day.instance);
        const double f_hist = dsl::evaluate(obj.ast, day.instance, agent::baseline_decision(bench.history, day.instance));
        const IterationRecord rec =
            agent::agent_step(model, day.instance, obj.ast, bench.history, guide,
                              step_context(q, obj.ast, canonical, bench.history, count, n), all, f_hist);
        row.g_agent = rec.g;
        row.f_agent = rec.f;
        row.nodes_agent = rec.nodes;
        row.seconds_agent = rec.wall_seconds;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

nlohmann::json cuts_to_json(const CutsReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CutsRow& r : report.rows) {
    nlohmann::json j{{"date", r.date}, {"query", r.query}, {"in_sample", r.in_sample}, {"objective", r.objective}};
    if (!r.error.empty()) {
      j["error"] = r.error;
    } else {
      nlohmann::json runs = nlohmann::json::array();
      for (const CutRun& c : r.full)
        runs.push_back({{"setting", c.setting},
                        {"status", c.status},
                        {"primary", c.primary},
                        {"secondary", c.secondary},
                        {"nodes", c.nodes},
                        {"gomory_cuts", c.gomory_cuts},
                        {"cover_cuts", c.cover_cuts},
                        {"seconds", c.seconds}});
      j.update({{"full", runs},
                {"g_agent", r.g_agent},
                {"f_agent", r.f_agent},
                {"nodes_agent", r.nodes_agent},
                {"seconds_agent", r.seconds_agent},
                {"objectives_agree", r.objectives_agree}});
    }
    rows.push_back(std::move(j));
  }
  return {{"schema", "fleetopt.bench.cuts/1"}, {"fixed_count", report.fixed_count}, {"rows", rows}};
}

namespace {

const CutRun* find_run(const CutsRow& r, const std::string& setting) {
  for (const CutRun& c : r.full)
    if (c.setting == setting) return &c;
  return nullptr;
}

mip::Sense row_sense(const CutsRow& r) { return dsl::parse(r.objective).sense; }

}  // namespace

std::string cuts_markdown(const CutsReport& report) {
  struct Family {
    const char* label;
    const char* setting;
  };
  const Family families[] = {{"Gomory cuts", "no-gomory"}, {"Cover cuts", "no-cover"}};
  std::string md = "# Cutting-plane comparison\n\nAgent: " + std::to_string(report.fixed_count) +
                   " variables fixed by the guide, all cut families on. Each FULL run disables one family. "
                   "Time gap = FULL time - agent time (share of FULL time in parentheses).\n\n";
  md += "| Cuts name | In-sample time gap | In-sample RF-Obj gap | In-sample QR-Obj gap | Out-of-sample time gap | "
        "Out-of-sample RF-Obj gap | Out-of-sample QR-Obj gap |\n|---|---|---|---|---|---|---|\n";
  std::vector<double> tot_s[2], tot_p[2], tot_rf[2], tot_qr[2];
  auto cell = [&](const char* setting, bool in, bool accumulate) {
    std::vector<double> s, p, rf, qr;
    for (const CutsRow& r : report.rows) {
      if (!r.error.empty() || r.in_sample != in) continue;
      const CutRun* off = find_run(r, setting);
      const CutRun* all = find_run(r, "all");
      if (!off || !all) continue;
      s.push_back(off->seconds - r.seconds_agent);
      p.push_back(off->seconds > 0 ? 100.0 * (off->seconds - r.seconds_agent) / off->seconds : 0.0);
      rf.push_back(objective_gap_pct(mip::Sense::Maximize, all->primary, r.g_agent));
      qr.push_back(objective_gap_pct(row_sense(r), all->secondary, r.f_agent));
    }
    if (accumulate) {
      const int k = in ? 0 : 1;
      tot_s[k].insert(tot_s[k].end(), s.begin(), s.end());
      tot_p[k].insert(tot_p[k].end(), p.begin(), p.end());
      tot_rf[k].insert(tot_rf[k].end(), rf.begin(), rf.end());
      tot_qr[k].insert(tot_qr[k].end(), qr.begin(), qr.end());
    }
    if (s.empty()) return std::string(" ") + dash + " | " + dash + " | " + dash + " |";
    return " " + num(mean(s), "%.2f") + "s(" + num(mean(p), "%.2f") + "%) | " + num(mean(rf), "%.2f") + "% | " +
           num(mean(qr), "%.2f") + "% |";
  };
  for (const Family& f : families) md += std::string("| ") + f.label + " |" + cell(f.setting, true, true) + cell(f.setting, false, true) + "\n";
  md += "| **Total average** |";
  for (int k : {0, 1}) {
    if (tot_s[k].empty()) {
      md += std::string(" ") + dash + " | " + dash + " | " + dash + " |";
      continue;
    }
    md += " " + num(mean(tot_s[k]), "%.2f") + "s(" + num(mean(tot_p[k]), "%.2f") + "%) | " + num(mean(tot_rf[k]), "%.2f") +
          "% | " + num(mean(tot_qr[k]), "%.2f") + "% |";
  }
  md += "\n\n## Cut families on the FULL model\n\nDeltas are against the run with every family on, averaged over cells.\n\n";
  md += "| Setting | Cells | Proven optimum unchanged | Mean node delta | Mean time delta (s) | Mean Gomory cuts | Mean cover cuts |\n"
        "|---|---|---|---|---|---|---|\n";
  for (const char* setting : {"all", "no-gomory", "no-cover", "none"}) {
    std::vector<double> nd, td, gc, cc;
    int agree = 0, cells = 0;
    for (const CutsRow& r : report.rows) {
      if (!r.error.empty()) continue;
      const CutRun* run = find_run(r, setting);
      const CutRun* all = find_run(r, "all");
      if (!run || !all) continue;
      ++cells;
      if (run->status == mip::to_string(mip::SolveStatus::Optimal) && all->status == run->status &&
          std::fabs(run->primary - all->primary) <= 1e-9 * std::max(1.0, std::fabs(all->primary)))
        ++agree;
      nd.push_back(static_cast<double>(run->nodes - all->nodes));
      td.push_back(run->seconds - all->seconds);
      gc.push_back(static_cast<double>(run->gomory_cuts));
      cc.push_back(static_cast<double>(run->cover_cuts));
    }
    md += std::string("| ") + setting + " | " + std::to_string(cells) + " | " + std::to_string(agree) + "/" +
          std::to_string(cells) + " | " + num(mean(nd), "%+.1f") + " | " + num(mean(td), "%+.3f") + " | " +
          num(mean(gc), "%.1f") + " | " + num(mean(cc), "%.1f") + " |\n";
  }
  std::string failed;
  for (const CutsRow& r : report.rows)
    if (!r.error.empty()) failed += "- " + r.date + ", \"" + r.query + "\": " + r.error + "\n";
  if (!failed.empty()) md += "\n## Failed cells\n\n" + failed;
  return md;
}

std::vector<std::filesystem::path> write_cuts_report(const CutsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "date,query,in_sample,setting,status,primary,secondary,nodes,gomory_cuts,cover_cuts,seconds,error\n";
  for (const CutsRow& r : report.rows) {
    const std::string head = r.date + "," + csv_field(r.query) + "," + (r.in_sample ? "1" : "0") + ",";
    if (!r.error.empty()) {
      csv += head + ",,,,,,,," + csv_field(r.error) + "\n";
      continue;
    }
    for (const CutRun& c : r.full)
      csv += head + c.setting + "," + c.status + "," + num(c.primary) + "," + num(c.secondary) + "," +
             std::to_string(c.nodes) + "," + std::to_string(c.gomory_cuts) + "," + std::to_string(c.cover_cuts) + "," +
             num(c.seconds) + ",\n";
    csv += head + "agent,," + num(r.g_agent) + "," + num(r.f_agent) + "," + std::to_string(r.nodes_agent) + ",,," +
           num(r.seconds_agent) + ",\n";
  }
  const std::vector<std::filesystem::path> paths{dir / "cuts.json", dir / "cuts.csv", dir / "cuts.md"};
  write_file(paths[0], cuts_to_json(report).dump(2) + "\n");
  write_file(paths[1], csv);
  write_file(paths[2], cuts_markdown(report));
  return paths;
}

AccuracyReport run_accuracy_experiment(const std::vector<dsl::CatalogEntry>& catalog, agent::Guide& guide,
                                       const FleetInstance& instance, const AccuracyConfig& config) {
  if (catalog.empty()) throw std::invalid_argument("accuracy: empty catalog");
  if (config.repetitions < 1) throw std::invalid_argument("accuracy: repetitions must be positive");
  auto* llm = dynamic_cast<agent::LlmGuide*>(&guide);
  AccuracyReport report;
  for (int prompts : config.prompt_counts) {
    if (prompts < 0) throw std::invalid_argument("accuracy: negative prompt count");
    for (bool in_sample : {true, false}) {
      if (in_sample && prompts == 0) continue;
      for (std::size_t e = 0; e < catalog.size(); ++e) {
        const dsl::CatalogEntry& entry = catalog[e];
        if (!in_sample && entry.paraphrases.empty()) continue;
        const dsl::ObjectiveAst truth = dsl::parse(entry.source);
        std::vector<dsl::CatalogEntry> shots;
        const std::size_t others = static_cast<std::size_t>(in_sample ? prompts - 1 : prompts);
        std::size_t taken = 0;
        for (std::size_t o = 0; o < catalog.size(); ++o) {
          if (o == e) {
            if (in_sample) shots.push_back(catalog[o]);
          } else if (taken < others) {
            shots.push_back(catalog[o]);
            ++taken;
          }
        }
        if (llm) llm->set_examples(shots);
        for (int rep = 0; rep < config.repetitions; ++rep) {
          AccuracyRow row;
          row.entry = e;
          row.linear = entry.linear;
          row.in_sample = in_sample;
          row.prompts = prompts;
          row.repetition = rep;
          row.query = in_sample ? entry.query : entry.paraphrases[static_cast<std::size_t>(rep) % entry.paraphrases.size()];
          try {
            const agent::IndicatorResult ir =
                agent::indicator_generate(agent::Query{row.query, "taxi"}, guide, instance, prompts);
            row.generated = ir.source;
            row.attempts = static_cast<int>(ir.attempts.size());
            row.text_similarity = dsl::text_similarity(ir.source, entry.source);
            row.result_similarity = dsl::result_similarity(ir.ast, truth, instance);
          } catch (const agent::IndicatorError& err) {
            row.attempts = static_cast<int>(err.attempts().size());
            row.error = err.what();
          } catch (const std::exception& err) {
            row.error = err.what();
          }
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  std::map<std::tuple<bool, int, bool>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const AccuracyRow& r : report.rows) {
    auto& g = groups[{!r.linear, r.prompts, !r.in_sample}];
    g.first.push_back(r.result_similarity);
    g.second.push_back(r.text_similarity);
  }
  for (const auto& [key, g] : groups)
    report.aggregates.push_back({!std::get<0>(key), std::get<1>(key), !std::get<2>(key),
                                 static_cast<int>(g.first.size()), mean(g.first), mean(g.second)});
  return report;
}

nlohmann::json accuracy_to_json(const AccuracyReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AccuracyRow& r : report.rows) {
    nlohmann::json j{{"entry", r.entry},
                     {"linear", r.linear},
                     {"in_sample", r.in_sample},
                     {"prompts", r.prompts},
                     {"repetition", r.repetition},
                     {"query", r.query},
                     {"generated", r.generated},
                     {"text_similarity", r.text_similarity},
                     {"result_similarity", r.result_similarity},
                     {"attempts", r.attempts}};
    if (!r.error.empty()) j["error"] = r.error;
    rows.push_back(std::move(j));
  }
  nlohmann::json aggs = nlohmann::json::array();
  for (const AccuracyAggregate& a : report.aggregates)
    aggs.push_back({{"linear", a.linear},
                    {"prompts", a.prompts},
                    {"in_sample", a.in_sample},
                    {"runs", a.runs},
                    {"mean_result_similarity", a.mean_result_similarity},
                    {"mean_text_similarity", a.mean_text_similarity}});
  return {{"schema", "fleetopt.bench.accuracy/1"}, {"rows", rows}, {"aggregates", aggs}};
}

std::string accuracy_markdown(const AccuracyReport& report) {
  std::string md = "# Objective generation accuracy\n";
  for (bool linear : {true, false}) {
    std::vector<int> prompts;
    for (const AccuracyAggregate& a : report.aggregates)
      if (a.linear == linear && std::find(prompts.begin(), prompts.end(), a.prompts) == prompts.end())
        prompts.push_back(a.prompts);
    if (prompts.empty()) continue;
    std::sort(prompts.begin(), prompts.end());
    md += std::string("\n## ") + (linear ? "Linear" : "Nonlinear") + " objectives\n\n";
    md += "| Prompts | In-sample result similarity | In-sample text similarity | Out-of-sample result similarity | "
          "Out-of-sample text similarity |\n|---|---|---|---|---|\n";
    for (int p : prompts) {
      md += "| " + std::to_string(p) + " |";
      for (bool in : {true, false}) {
        const AccuracyAggregate* hit = nullptr;
        for (const AccuracyAggregate& a : report.aggregates)
          if (a.linear == linear && a.prompts == p && a.in_sample == in) hit = &a;
        md += hit ? " " + num(hit->mean_result_similarity, "%.2f") + " | " + num(hit->mean_text_similarity, "%.2f") + " |"
                  : std::string(" ") + dash + " | " + dash + " |";
      }
      md += "\n";
    }
  }
  return md;
}

std::vector<std::filesystem::path> write_accuracy_report(const AccuracyReport& report,
                                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "entry,linear,in_sample,prompts,repetition,query,text_similarity,result_similarity,attempts,error\n";
  for (const AccuracyRow& r : report.rows)
    csv += std::to_string(r.entry) + "," + (r.linear ? "1" : "0") + "," + (r.in_sample ? "1" : "0") + "," +
           std::to_string(r.prompts) + "," + std::to_string(r.repetition) + "," + csv_field(r.query) + "," +
           num(r.text_similarity) + "," + num(r.result_similarity) + "," + std::to_string(r.attempts) + "," +
           csv_field(r.error) + "\n";
  const std::vector<std::filesystem::path> paths{dir / "accuracy.json", dir / "accuracy.csv", dir / "accuracy.md"};
  write_file(paths[0], accuracy_to_json(report).dump(2) + "\n");
  write_file(paths[1], csv);
  write_file(paths[2], accuracy_markdown(report));
  return paths;
}

}  // namespace fleetopt::data
