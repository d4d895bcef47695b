#include <algorithm>
#include <numeric>

#include "fleetopt/data/bench.hpp"
#include "fleetopt/mip/branch_and_bound.hpp"

namespace fleetopt::data {

TrainedForest train_world_forest(const World& world) {
  TrainConfig tc = world.config.forest;
  tc.seed = derive_seed(world.config.seed, tc.seed);
  const Dataset all = training_data(world);
  auto [train_set, test_set] = split_train_test(all, tc.test_fraction, tc.seed);
  TrainedForest out;
  out.forest = train(world_schema(world), train_set, tc);
  out.train_rows = train_set.size();
  out.test_rows = test_set.size();
  out.test_r2 = evaluate_r2(out.forest, test_set);
  return out;
}

std::vector<std::size_t> sample_days(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m > n) throw std::invalid_argument("sample_days: more days requested than available");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

HistoryRun make_history(const std::vector<DayInstance>& days, const Forest& forest, std::size_t m,
                        const mip::SolveConfig& solve, std::uint64_t seed, const EncoderConfig& encoder) {
  if (m < 1 || m > days.size()) throw std::invalid_argument("make_history: m must lie in [1, number of days]");
  HistoryRun run;
  run.day_indices = sample_days(days.size(), m, derive_seed(seed, 9000));
  for (std::size_t d : run.day_indices) {
    const DayInstance& day = days[d];
    const FeatureMip model = build_feature_mip(day.instance, forest, day.exogenous, encoder);
    const mip::Solution sol = mip::branch_and_bound(model.problem, solve);
    if (sol.status != mip::SolveStatus::Optimal) {
      run.failures.push_back(format_date(day.day) + ": " + mip::to_string(sol.status));
      continue;
    }
    agent::HistoryRecord rec;
    rec.day = day.day;
    rec.instance = day.instance;
    rec.exogenous = day.exogenous;
    rec.decision = decision_from_feature_solution(day.instance, model, sol.values);
    rec.objective = sol.objective;
    run.store.records.push_back(std::move(rec));
  }
  if (run.store.records.empty()) throw std::runtime_error("make_history: no day solved to optimality");
  run.store.finalize();
  return run;
}

Workbench prepare_workbench(const SynthConfig& synth, const WorkbenchConfig& config) {
  if (config.history_days < 1 || config.eval_days < 1)
    throw std::invalid_argument("workbench: history and evaluation day counts must be positive");
  Workbench wb;
  wb.world = generate_world(synth);
  wb.forest = train_world_forest(wb.world).forest;
  const auto n = wb.world.days.size();
  if (static_cast<std::size_t>(config.history_days + config.eval_days) > n)
    throw std::invalid_argument("workbench: world has too few days");
  HistoryRun run = make_history(wb.world.days, wb.forest, static_cast<std::size_t>(config.history_days), config.solve,
                                synth.seed);
  wb.history = std::move(run.store);
  wb.history_days = run.day_indices;
  for (std::size_t d = 0; d < n && wb.eval_days.size() < static_cast<std::size_t>(config.eval_days); ++d)
    if (!std::binary_search(wb.history_days.begin(), wb.history_days.end(), d)) wb.eval_days.push_back(d);
  return wb;
}

}  // namespace fleetopt::data
