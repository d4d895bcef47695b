#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetopt/agent/agent.hpp"
#include "fleetopt/data/world.hpp"

namespace fleetopt::data {

struct TrainedForest {
  Forest forest;
  double test_r2 = 0.0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

/// training_data split by config.forest.test_fraction and trained with
/// config.forest; both seeded with derive_seed(config.seed, config.forest.seed).
TrainedForest train_world_forest(const World& world);

/// m distinct indices in [0, n), seeded, ascending.
std::vector<std::size_t> sample_days(std::size_t n, std::size_t m, std::uint64_t seed);

struct HistoryRun {
  agent::HistoryStore store;
  std::vector<std::size_t> day_indices;  // into the input list, solved or not
  std::vector<std::string> failures;     // one line per day without a proven optimum
};

/// Solves the forest model to optimality on m seeded-sampled days. Throws
/// std::invalid_argument when m is out of range and std::runtime_error when
/// no day solves.
HistoryRun make_history(const std::vector<DayInstance>& days, const Forest& forest, std::size_t m,
                        const mip::SolveConfig& solve, std::uint64_t seed, const EncoderConfig& encoder = {});

/// Shared inputs of the experiments.
struct Workbench {
  World world;
  Forest forest;
  agent::HistoryStore history;
  std::vector<std::size_t> history_days;
  std::vector<std::size_t> eval_days;  // first days outside the history, ascending
};

struct WorkbenchConfig {
  int history_days = 14;
  int eval_days = 4;
  mip::SolveConfig solve = agent::AgentConfig::default_solve();
};

Workbench prepare_workbench(const SynthConfig& synth, const WorkbenchConfig& config = {});

/// in_sample: the query text is a catalog query verbatim; otherwise a
/// paraphrase.
struct BenchQuery {
  std::string text;
  bool in_sample = true;
  bool operator==(const BenchQuery&) const = default;
};

/// Verbatim catalog queries 0, 2, 3, 4, 8, 12 and the first paraphrases of
/// entries 1 and 6. All linear.
std::vector<BenchQuery> default_bench_queries();
/// Nonlinear catalog entries, verbatim.
std::vector<BenchQuery> nonlinear_bench_queries();

/// 100 * (full - agent) / |full| oriented by sense (maximize: full - agent);
/// the divisor is dropped when |full| < 1e-9.
double objective_gap_pct(mip::Sense sense, double full, double agent);

struct EfficiencyConfig {
  std::vector<int> fixed_counts;  // empty: 0, n/4, n/2, 3n/4
  int few_shot = 8;
  mip::SolveConfig solve = agent::AgentConfig::default_solve();
  EncoderConfig encoder;
  dsl::LowerOptions lower;
};

struct EfficiencyRow {
  std::string date;
  std::size_t day_index = 0;
  std::string query;
  bool in_sample = true;
  std::string objective;
  bool linear = true;
  int fixed_count = 0;   // requested
  int fixed_actual = 0;  // after infeasibility recovery
  std::string status;
  double g_full = 0.0, g_agent = 0.0;
  double f_full = 0.0, f_agent = 0.0;
  double rf_gap_pct = 0.0, qr_gap_pct = 0.0;
  long nodes_full = 0, nodes_agent = 0;
  double seconds_full = 0.0, seconds_agent = 0.0;
  std::vector<std::string> events;
  std::string error;  // non-empty: the cell failed and holds no numbers
};

struct EfficiencyAggregate {
  int fixed_count = 0;
  bool in_sample = true;
  bool linear = true;
  int cells = 0;
  double mean_rf_gap_pct = 0.0, mean_qr_gap_pct = 0.0;
  double mean_nodes_agent = 0.0, mean_nodes_full = 0.0;
  double mean_seconds_agent = 0.0, mean_seconds_full = 0.0;
  double median_seconds_agent = 0.0, median_seconds_full = 0.0;
};

struct EfficiencyReport {
  int num_variables = 0;
  std::vector<EfficiencyRow> rows;
  std::vector<EfficiencyAggregate> aggregates;  // by (linear, fixed_count, in_sample), failed cells left out
};

/// Every (eval day, query) cell: the FULL model once, then one guided
/// fix-and-solve per fixed count. Per-cell failures are recorded.
EfficiencyReport run_efficiency_experiment(const Workbench& bench, const std::vector<BenchQuery>& queries,
                                           agent::Guide& guide, const EfficiencyConfig& config = {});

std::vector<EfficiencyAggregate> aggregate_efficiency(const std::vector<EfficiencyRow>& rows);

/// efficiency.json, efficiency.csv, efficiency.md hold no timings and are
/// reproducible; efficiency_timings.csv and efficiency_timings.md hold the
/// CPU times. Returns the written paths, reproducible files first.
std::vector<std::filesystem::path> write_efficiency_report(const EfficiencyReport& report,
                                                           const std::filesystem::path& dir);
nlohmann::json efficiency_to_json(const EfficiencyReport& report);
std::string efficiency_markdown(const EfficiencyReport& report);
std::string efficiency_timings_markdown(const EfficiencyReport& report);

struct CutsConfig {
  int fixed_count = -1;  // agent's fixed count; negative: n/2
  int few_shot = 8;
  mip::SolveConfig solve = agent::AgentConfig::default_solve();  // cut switches are overridden
  EncoderConfig encoder;
  dsl::LowerOptions lower;
};

/// One solve of the FULL model under a cut setting.
struct CutRun {
  std::string setting;  // "all", "no-gomory", "no-cover", "none"
  std::string status;
  double primary = 0.0;    // proven stage-1 optimum
  double secondary = 0.0;  // query objective
  long nodes = 0;
  long gomory_cuts = 0, cover_cuts = 0;
  double seconds = 0.0;
};

struct CutsRow {
  std::string date;
  std::size_t day_index = 0;
  std::string query;
  bool in_sample = true;
  std::string objective;
  std::vector<CutRun> full;  // all, no-gomory, no-cover, none
  double g_agent = 0.0, f_agent = 0.0;
  long nodes_agent = 0;
  double seconds_agent = 0.0;
  bool objectives_agree = true;  // every setting proves the same primary optimum
  std::string error;
};

struct CutsReport {
  int fixed_count = 0;
  std::vector<CutsRow> rows;
};

CutsReport run_cuts_experiment(const Workbench& bench, const std::vector<BenchQuery>& queries, agent::Guide& guide,
                               const CutsConfig& config = {});

std::vector<std::filesystem::path> write_cuts_report(const CutsReport& report, const std::filesystem::path& dir);
nlohmann::json cuts_to_json(const CutsReport& report);
std::string cuts_markdown(const CutsReport& report);

struct AccuracyConfig {
  std::vector<int> prompt_counts{0, 5, 10, 15};
  int repetitions = 10;
};

struct AccuracyRow {
  std::size_t entry = 0;  // catalog index of the ground truth
  bool linear = true;
  bool in_sample = true;
  int prompts = 0;
  int repetition = 0;
  std::string query;
  std::string generated;
  double text_similarity = 0.0;
  double result_similarity = 0.0;
  int attempts = 0;
  std::string error;
};

struct AccuracyAggregate {
  bool linear = true;
  int prompts = 0;
  bool in_sample = true;
  int runs = 0;
  double mean_result_similarity = 0.0;
  double mean_text_similarity = 0.0;
};

struct AccuracyReport {
  std::vector<AccuracyRow> rows;
  std::vector<AccuracyAggregate> aggregates;
};

/// Every catalog entry under every prompt count and repetition. In-sample
/// runs send the verbatim query with its own pair among the examples (no run
/// at 0 prompts); out-of-sample runs send a paraphrase (alternating by
/// repetition) with the pair left out. Few-shot examples follow catalog
/// order. Failed generations score 0.
AccuracyReport run_accuracy_experiment(const std::vector<dsl::CatalogEntry>& catalog, agent::Guide& guide,
                                       const FleetInstance& instance, const AccuracyConfig& config = {});

std::vector<std::filesystem::path> write_accuracy_report(const AccuracyReport& report,
                                                         const std::filesystem::path& dir);
nlohmann::json accuracy_to_json(const AccuracyReport& report);
std::string accuracy_markdown(const AccuracyReport& report);

}  // namespace fleetopt::data
