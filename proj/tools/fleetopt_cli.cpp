#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetopt/agent/agent.hpp"
#include "fleetopt/data/bench.hpp"
#include "fleetopt/mip/branch_and_bound.hpp"

using namespace fleetopt;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw FormatError(path + ": not valid JSON");
  return doc;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = ".";
  double time_limit = 0.0;
  std::string guide = "deterministic";
  std::string transcript;
  std::string replay;
};

data::SynthConfig synth_config(const Common& c) {
  data::SynthConfig cfg;
  if (!c.config.empty()) {
    const json doc = read_json(c.config);
    cfg = data::synth_config_from_json(doc.contains("synth") ? doc.at("synth") : doc);
  }
  if (c.seed_set) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

mip::SolveConfig solve_config(const Common& c) {
  mip::SolveConfig s = agent::AgentConfig::default_solve();
  if (c.time_limit > 0.0) s.time_limit_seconds = c.time_limit;
  return s;
}

// Guide plus the transports it borrows.
struct GuideHolder {
  std::unique_ptr<agent::ChatTransport> inner;
  std::unique_ptr<agent::RecordingTransport> recorder;
  std::unique_ptr<agent::Guide> guide;
  std::string transcript_path;

  ~GuideHolder() {
    if (recorder && !transcript_path.empty()) {
      try {
        write_json(transcript_path, agent::transcript_to_json(recorder->exchanges()));
      } catch (const std::exception& e) {
        std::cerr << "warning: transcript not written: " << e.what() << "\n";
      }
    }
  }
};

std::unique_ptr<GuideHolder> make_guide(const Common& c) {
  auto h = std::make_unique<GuideHolder>();
  if (c.guide == "deterministic") {
    h->guide = std::make_unique<agent::DeterministicGuide>();
    return h;
  }
  const agent::ChatEndpoint endpoint = agent::ChatEndpoint::from_env();
  if (!c.replay.empty())
    h->inner = std::make_unique<agent::ReplayTransport>(agent::transcript_from_json(read_json(c.replay)));
  else
    h->inner = std::make_unique<agent::HttpChatTransport>(endpoint);
  h->recorder = std::make_unique<agent::RecordingTransport>(*h->inner);
  h->transcript_path = c.transcript;
  h->guide = std::make_unique<agent::LlmGuide>(*h->recorder, endpoint.model);
  return h;
}

const data::DayInstance& pick_day(const data::World& world, int index, const std::string& date) {
  if (!date.empty()) {
    const auto d = data::parse_date(date);
    for (const data::DayInstance& day : world.days)
      if (day.day == d) return day;
    throw std::invalid_argument("no instance for " + date);
  }
  if (index < 0 || static_cast<std::size_t>(index) >= world.days.size())
    throw std::invalid_argument("day index out of range");
  return world.days[static_cast<std::size_t>(index)];
}

json solution_json(const mip::Solution& s, const FleetInstance& inst, const FeatureMip& m) {
  json j{{"status", mip::to_string(s.status)},
         {"objective", s.objective},
         {"best_bound", s.best_bound},
         {"nodes", s.nodes},
         {"lp_iterations", s.lp_iterations}};
  if (s.has_solution()) j["decision"] = decision_to_json(decision_from_feature_solution(inst, m, s.values));
  return j;
}

void print_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-driven fleet pre-allocation and pricing with guided variable fixing"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config, "JSON file with a synthetic-world configuration");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "Top-level seed");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--time-limit", c.time_limit, "Solver time limit per solve (seconds)");
    sub->add_option("--guide", c.guide, "Problem guide")->check(CLI::IsMember({"deterministic", "llm"}));
    sub->add_option("--transcript", c.transcript, "Record LLM exchanges to this file");
    sub->add_option("--replay", c.replay, "Serve LLM replies from a recorded transcript");
  };

  std::string world_path, forest_path, history_path, query_text, objective_src, date;
  int day_index = 0, history_days = 14, eval_days = 4, t_max = 5, repetitions = 10;
  std::vector<int> counts, prompts;
  std::string query_set = "linear";

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic world");
  add_common(gen);

  auto* trainc = app.add_subcommand("train-forest", "Train the profit forest on a world");
  add_common(trainc);
  trainc->add_option("--world", world_path, "World file")->required();

  auto* hist = app.add_subcommand("make-history", "Solve the forest model on sampled days");
  add_common(hist);
  hist->add_option("--world", world_path, "World file")->required();
  hist->add_option("--forest", forest_path, "Forest file")->required();
  hist->add_option("--days", history_days, "Number of days")->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve", "Solve the FULL forest model for one day");
  add_common(solve);
  solve->add_option("--world", world_path, "World file")->required();
  solve->add_option("--forest", forest_path, "Forest file")->required();
  solve->add_option("--day", day_index, "Day index");
  solve->add_option("--date", date, "Day as YYYY-MM-DD");

  auto* agentc = app.add_subcommand("agent", "Run the fix-and-resolve loop for one query");
  add_common(agentc);
  agentc->add_option("--world", world_path, "World file")->required();
  agentc->add_option("--forest", forest_path, "Forest file")->required();
  agentc->add_option("--history", history_path, "History file")->required();
  agentc->add_option("--day", day_index, "Day index");
  agentc->add_option("--date", date, "Day as YYYY-MM-DD");
  agentc->add_option("--query", query_text, "Operator request")->required();
  agentc->add_option("--objective", objective_src, "Objective source; skips generation");
  agentc->add_option("--t-max", t_max, "Maximum iterations")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Run an experiment");
  add_common(bench);
  bench->require_subcommand(1);
  auto* acc = bench->add_subcommand("accuracy", "Objective generation accuracy");
  auto* eff = bench->add_subcommand("efficiency", "Fixed-count sweep against the FULL model");
  auto* cuts = bench->add_subcommand("cuts", "Guided fixing against cut-family toggles");
  for (CLI::App* sub : {acc, eff, cuts}) sub->fallthrough();
  for (CLI::App* sub : {eff, cuts}) {
    sub->add_option("--history-days", history_days, "History size")->check(CLI::PositiveNumber);
    sub->add_option("--eval-days", eval_days, "Evaluation days")->check(CLI::PositiveNumber);
    sub->add_option("--queries", query_set, "Query set")->check(CLI::IsMember({"linear", "nonlinear", "all"}));
  }
  eff->add_option("--counts", counts, "Fixed-variable counts");
  acc->add_option("--repetitions", repetitions, "Runs per query")->check(CLI::PositiveNumber);
  acc->add_option("--prompts", prompts, "Few-shot counts");

  auto* query = app.add_subcommand("query", "Answer a request end to end on a generated world");
  add_common(query);
  query->add_option("text", query_text, "Operator request")->required();
  query->add_option("--day", day_index, "Evaluation day (index among days outside the history)");
  query->add_option("--history-days", history_days, "History size")->check(CLI::PositiveNumber);
  query->add_option("--t-max", t_max, "Maximum iterations")->check(CLI::PositiveNumber);

  auto* catalog = app.add_subcommand("catalog", "Print the query catalog");
  add_common(catalog);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::filesystem::path out(c.out);
    if (*gen) {
      const data::World world = data::generate_world(synth_config(c));
      write_json(out / "world.json", data::world_to_json(world));
      std::cout << (out / "world.json").string() << "\n";
    } else if (*trainc) {
      const data::World world = data::world_from_json(read_json(world_path));
      const data::TrainedForest tf = data::train_world_forest(world);
      write_json(out / "forest.json", forest_to_json(tf.forest));
      std::printf("trees %zu, nodes %zu, train rows %zu, test rows %zu, test R2 %.4f\n", tf.forest.trees.size(),
                  tf.forest.total_nodes(), tf.train_rows, tf.test_rows, tf.test_r2);
    } else if (*hist) {
      const data::World world = data::world_from_json(read_json(world_path));
      const Forest forest = forest_from_json(read_json(forest_path));
      const std::uint64_t seed = c.seed_set ? c.seed : world.config.seed;
      const data::HistoryRun run = data::make_history(world.days, forest, static_cast<std::size_t>(history_days),
                                                      solve_config(c), seed);
      write_json(out / "history.json", agent::history_to_json(run.store));
      for (const std::string& f : run.failures) std::cerr << "failed: " << f << "\n";
      std::printf("%zu records\n", run.store.records.size());
    } else if (*solve) {
      const data::World world = data::world_from_json(read_json(world_path));
      const Forest forest = forest_from_json(read_json(forest_path));
      const data::DayInstance& day = pick_day(world, day_index, date);
      const FeatureMip model = build_feature_mip(day.instance, forest, day.exogenous);
      const mip::Solution sol = mip::branch_and_bound(model.problem, solve_config(c));
      json j = solution_json(sol, day.instance, model);
      j["date"] = data::format_date(day.day);
      write_json(out / "solution.json", j);
      std::printf("%s: %s, profit %.6f, %ld nodes, %.3f s\n", data::format_date(day.day).c_str(),
                  mip::to_string(sol.status), sol.objective, sol.nodes, sol.wall_seconds);
    } else if (*agentc) {
      const data::World world = data::world_from_json(read_json(world_path));
      const Forest forest = forest_from_json(read_json(forest_path));
      const agent::HistoryStore history = agent::history_from_json(read_json(history_path));
      const data::DayInstance& day = pick_day(world, day_index, date);
      auto guide = make_guide(c);
      const agent::Query q{query_text, ""};
      const agent::MatchResult match = agent::problem_match(q, agent::default_registry());
      if (match.id != "taxi") throw std::runtime_error("request matched domain '" + match.id + "', which has no model");
      dsl::ObjectiveAst objective;
      if (!objective_src.empty()) {
        objective = dsl::parse(objective_src);
        const dsl::Validation v = dsl::safeguard(objective, day.instance);
        if (!v.accepted) throw std::runtime_error("objective rejected:\n" + v.report());
      } else {
        objective = agent::indicator_generate(q, *guide->guide, day.instance).ast;
      }
      agent::AgentConfig cfg;
      cfg.t_max = t_max;
      cfg.solve = solve_config(c);
      const agent::AgentTrace trace =
          agent::run_agent(q, objective, day.instance, day.exogenous, forest, history, *guide->guide, cfg);
      write_json(out / "trace.json", trace.to_json());
      write_json(out / "trace_timings.json", trace.to_json(true));
      const std::string summary = agent::response_format(trace, day.instance);
      write_text(out / "summary.txt", summary);
      std::cout << summary;
    } else if (*bench) {
      auto guide = make_guide(c);
      const data::SynthConfig synth = synth_config(c);
      if (*acc) {
        const data::World world = data::generate_world(synth);
        data::AccuracyConfig ac;
        ac.repetitions = repetitions;
        if (!prompts.empty()) ac.prompt_counts = prompts;
        const data::AccuracyReport r =
            data::run_accuracy_experiment(dsl::builtin_catalog(), *guide->guide, world.days.front().instance, ac);
        print_paths(data::write_accuracy_report(r, out));
      } else {
        data::WorkbenchConfig wc;
        wc.history_days = history_days;
        wc.eval_days = eval_days;
        wc.solve = solve_config(c);
        const data::Workbench wb = data::prepare_workbench(synth, wc);
        std::vector<data::BenchQuery> queries;
        if (query_set != "nonlinear") queries = data::default_bench_queries();
        if (query_set != "linear")
          for (const data::BenchQuery& q : data::nonlinear_bench_queries()) queries.push_back(q);
        if (*eff) {
          data::EfficiencyConfig ec;
          ec.fixed_counts = counts;
          ec.solve = solve_config(c);
          print_paths(data::write_efficiency_report(data::run_efficiency_experiment(wb, queries, *guide->guide, ec), out));
        } else {
          data::CutsConfig cc;
          cc.solve = solve_config(c);
          print_paths(data::write_cuts_report(data::run_cuts_experiment(wb, queries, *guide->guide, cc), out));
        }
      }
    } else if (*query) {
      const data::SynthConfig synth = synth_config(c);
      data::WorkbenchConfig wc;
      wc.history_days = history_days;
      wc.eval_days = day_index + 1;
      wc.solve = solve_config(c);
      const data::Workbench wb = data::prepare_workbench(synth, wc);
      const data::DayInstance& day = wb.world.days.at(wb.eval_days.at(static_cast<std::size_t>(day_index)));
      auto guide = make_guide(c);
      const agent::Query q{query_text, ""};
      const agent::MatchResult match = agent::problem_match(q, agent::default_registry());
      if (match.low_confidence) std::cerr << "note: no domain keywords found; using the taxi agent\n";
      else if (match.id != "taxi") throw std::runtime_error("request matched domain '" + match.id + "', which has no model");
      const agent::IndicatorResult ir = agent::indicator_generate(q, *guide->guide, day.instance);
      agent::AgentConfig cfg;
      cfg.t_max = t_max;
      cfg.solve = solve_config(c);
      const agent::AgentTrace trace =
          agent::run_agent(q, ir.ast, day.instance, day.exogenous, wb.forest, wb.history, *guide->guide, cfg);
      write_json(out / "trace.json", trace.to_json());
      const std::string summary = agent::response_format(trace, day.instance);
      write_text(out / "summary.txt", summary);
      std::cout << "Date: " << data::format_date(day.day) << "\n" << summary;
    } else if (*catalog) {
      std::cout << dsl::catalog_to_json(dsl::builtin_catalog()).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
