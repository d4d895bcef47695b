#include "fleetopt/mip/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>

#include "fleetopt/mip/cuts.hpp"
#include "fleetopt/mip/lp_engine.hpp"
#include "fleetopt/mip/propagation.hpp"

namespace fleetopt::mip {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kIntTol = 1e-6;
constexpr double kRowTol = 1e-9;

struct BoundChange {
  int col;
  double lower;
  double upper;
};

struct NodeData {
  std::shared_ptr<const NodeData> parent;
  std::vector<BoundChange> changes;
};

struct OpenNode {
  double bound;  // internal (minimization) LP bound inherited from the parent
  long id;
  std::shared_ptr<NodeData> data;
};

struct HeapOrder {
  bool operator()(const OpenNode& a, const OpenNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

LpRow to_lp_row(const Constraint& c) {
  LpRow row{c.terms, -kInf, kInf};
  if (c.relation != Relation::GreaterEqual) row.upper = c.rhs;
  if (c.relation != Relation::LessEqual) row.lower = c.rhs;
  return row;
}

LpRow to_lp_row(const CutRow& c) {
  LpRow row{c.terms, -kInf, kInf};
  if (c.relation != Relation::GreaterEqual) row.upper = c.rhs;
  if (c.relation != Relation::LessEqual) row.lower = c.rhs;
  return row;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// The problem after root presolve: fixed columns removed, rows folded.
struct Reduced {
  std::vector<int> orig_of;   // reduced column -> original variable
  std::vector<int> red_of;    // original variable -> reduced column or -1
  std::vector<double> lower, upper, cost;
  std::vector<char> integral;
  std::vector<LpRow> rows;
  double constant = 0.0;      // objective constant in the problem's own sense
  bool infeasible = false;
};

Reduced reduce(const MipProblem& problem, const std::vector<double>& lo, const std::vector<double>& hi, double sign) {
  Reduced red;
  const int n = problem.num_variables();
  red.red_of.assign(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (lo[sj] < hi[sj]) {
      red.red_of[sj] = static_cast<int>(red.orig_of.size());
      red.orig_of.push_back(j);
      red.lower.push_back(lo[sj]);
      red.upper.push_back(hi[sj]);
      red.integral.push_back(problem.variable(j).is_integral() ? 1 : 0);
      red.cost.push_back(0.0);
    }
  }
  red.constant = problem.objective().constant;
  for (const Term& t : problem.objective().terms) {
    const int r = red.red_of[static_cast<std::size_t>(t.var)];
    if (r < 0) red.constant += t.coef * lo[static_cast<std::size_t>(t.var)];
    else red.cost[static_cast<std::size_t>(r)] += sign * t.coef;
  }
  for (const Constraint& c : problem.constraints()) {
    LpRow full = to_lp_row(c);
    LpRow row;
    double shift = 0.0;
    for (const Term& t : full.terms) {
      const int r = red.red_of[static_cast<std::size_t>(t.var)];
      if (r < 0) shift += t.coef * lo[static_cast<std::size_t>(t.var)];
      else if (t.coef != 0.0) row.terms.push_back(Term{r, t.coef});
    }
    row.lower = full.lower - shift;
    row.upper = full.upper - shift;
    const double tol = 1e-7 * (1.0 + std::fabs(shift));
    if (row.terms.empty()) {
      if (row.lower > tol || row.upper < -tol) {
        red.infeasible = true;
        return red;
      }
      continue;
    }
    double min_act = 0.0, max_act = 0.0;
    for (const Term& t : row.terms) {
      const double l = red.lower[static_cast<std::size_t>(t.var)];
      const double u = red.upper[static_cast<std::size_t>(t.var)];
      min_act += t.coef > 0 ? t.coef * l : t.coef * u;
      max_act += t.coef > 0 ? t.coef * u : t.coef * l;
    }
    const bool lower_slack = !std::isfinite(row.lower) || row.lower <= min_act - kRowTol;
    const bool upper_slack = !std::isfinite(row.upper) || row.upper >= max_act + kRowTol;
    if (lower_slack && upper_slack) continue;
    red.rows.push_back(std::move(row));
  }
  return red;
}

class Search {
 public:
  Search(const MipProblem& problem, const SolveConfig& config, std::span<const double> hint)
      : problem_(problem), config_(config), hint_(hint), start_(Clock::now()) {}

  Solution run();

 private:
  bool out_of_time() const {
    return std::isfinite(config_.time_limit_seconds) && seconds_since(start_) > config_.time_limit_seconds;
  }
  double prune_tolerance() const {
    const double scale = std::max(1.0, std::fabs(incumbent_value_));
    return std::max(config_.gap_tolerance, 1e-9) * scale;
  }
  double own(double internal) const { return sign_ * internal; }
  double internal_objective(const LpEngine& lp) const { return lp.objective() + sign_ * red_.constant; }

  void offer_incumbent(const std::vector<double>& red_values, double internal_value, long node);
  void record_progress(long node, double global_bound);
  int pick_branch_column(const LpEngine& lp) const;
  void run_cut_rounds(LpEngine& lp, Propagator& prop, Solution& sol);
  std::vector<double> expand(const std::vector<double>& red_values) const;

  const MipProblem& problem_;
  const SolveConfig& config_;
  std::span<const double> hint_;
  Clock::time_point start_;
  double sign_ = 1.0;
  Reduced red_;
  std::vector<double> fixed_lower_;  // original-space bounds after root propagation

  bool has_incumbent_ = false;
  double incumbent_value_ = kInf;  // internal
  std::vector<double> incumbent_;  // reduced space
  std::vector<ProgressPoint> progress_;
};

std::vector<double> Search::expand(const std::vector<double>& red_values) const {
  std::vector<double> values = fixed_lower_;
  for (std::size_t r = 0; r < red_.orig_of.size(); ++r) values[static_cast<std::size_t>(red_.orig_of[r])] = red_values[r];
  for (int j = 0; j < problem_.num_variables(); ++j)
    if (problem_.variable(j).is_integral()) values[static_cast<std::size_t>(j)] = std::round(values[static_cast<std::size_t>(j)]);
  return values;
}

void Search::record_progress(long node, double global_bound) {
  if (!config_.record_progress) return;
  const double inc = has_incumbent_ ? own(incumbent_value_) : std::nan("");
  progress_.push_back(ProgressPoint{node, inc, own(global_bound)});
}

void Search::offer_incumbent(const std::vector<double>& red_values, double internal_value, long node) {
  if (has_incumbent_ && internal_value >= incumbent_value_) return;
  has_incumbent_ = true;
  incumbent_value_ = internal_value;
  incumbent_ = red_values;
  (void)node;
}

int Search::pick_branch_column(const LpEngine& lp) const {
  int best = -1;
  double best_frac = kIntTol;
  for (int j = 0; j < lp.num_structural(); ++j) {
    if (!red_.integral[static_cast<std::size_t>(j)]) continue;
    const double v = lp.value(j);
    const double f = std::fabs(v - std::round(v));
    if (f > best_frac + 1e-12) {
      best_frac = f;
      best = j;
    }
  }
  return best;
}

void Search::run_cut_rounds(LpEngine& lp, Propagator& prop, Solution& sol) {
  const CutOptions& opt = config_.cuts;
  if (!opt.gomory && !opt.cover) return;
  for (int round = 0; round < opt.max_rounds; ++round) {
    if (pick_branch_column(lp) < 0 || out_of_time()) return;
    const double before = internal_objective(lp);
    std::vector<CutRow> cuts;
    if (opt.gomory) {
      auto g = gomory_cuts(lp, red_.integral, opt.max_gomory_per_round);
      sol.gomory_cuts += static_cast<int>(g.size());
      cuts.insert(cuts.end(), g.begin(), g.end());
    }
    if (opt.cover) {
      const std::vector<double> x = lp.structural_values();
      auto c = cover_cuts(red_.rows, red_.lower, red_.upper, red_.integral, x);
      sol.cover_cuts += static_cast<int>(c.size());
      cuts.insert(cuts.end(), c.begin(), c.end());
    }
    if (cuts.empty()) return;
    std::vector<LpRow> rows;
    for (const CutRow& c : cuts) {
      rows.push_back(to_lp_row(c));
      if (config_.record_cuts) {
        CutRow mapped = c;
        for (Term& t : mapped.terms) t.var = red_.orig_of[static_cast<std::size_t>(t.var)];
        sol.cuts.push_back(std::move(mapped));
      }
    }
    prop.add_rows(rows);
    lp.add_rows(rows);
    const LpStatus st = lp.solve();
    if (st != LpStatus::Optimal) return;
    const double after = internal_objective(lp);
    if (after - before <= 1e-7 * std::max(1.0, std::fabs(before))) return;
  }
}

Solution Search::run() {
  Solution sol;
  problem_.validate();
  const int n = problem_.num_variables();
  sign_ = problem_.objective().sense == Sense::Maximize ? -1.0 : 1.0;

  std::vector<double> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  std::vector<char> integral(static_cast<std::size_t>(n));
  bool infeasible = false;
  for (int j = 0; j < n; ++j) {
    const Variable& v = problem_.variable(j);
    const auto sj = static_cast<std::size_t>(j);
    integral[sj] = v.is_integral() ? 1 : 0;
    lo[sj] = integral[sj] ? std::ceil(v.lower - kIntTol) : v.lower;
    hi[sj] = integral[sj] ? std::floor(v.upper + kIntTol) : v.upper;
    if (lo[sj] > hi[sj]) infeasible = true;
  }
  auto finish = [&](SolveStatus status) {
    sol.status = status;
    sol.wall_seconds = seconds_since(start_);
    sol.progress = std::move(progress_);
    return sol;
  };
  if (infeasible) return finish(SolveStatus::Infeasible);

  std::vector<LpRow> rows;
  for (const Constraint& c : problem_.constraints()) rows.push_back(to_lp_row(c));
  {
    Propagator full(n, rows, integral);
    if (!full.propagate(lo, hi)) return finish(SolveStatus::Infeasible);
  }
  fixed_lower_ = lo;
  red_ = reduce(problem_, lo, hi, sign_);
  if (red_.infeasible) return finish(SolveStatus::Infeasible);

  if (hint_.size() == static_cast<std::size_t>(n) && problem_.max_violation(hint_) <= 1e-6) {
    bool consistent = true;
    for (int j = 0; j < n; ++j)
      if (hint_[static_cast<std::size_t>(j)] < lo[static_cast<std::size_t>(j)] - 1e-6 ||
          hint_[static_cast<std::size_t>(j)] > hi[static_cast<std::size_t>(j)] + 1e-6)
        consistent = false;
    if (consistent) {
      std::vector<double> rv;
      for (int j : red_.orig_of) rv.push_back(hint_[static_cast<std::size_t>(j)]);
      offer_incumbent(rv, sign_ * problem_.objective().evaluate(expand(rv)), 0);
    }
  }

  LpEngine lp(red_.lower, red_.upper, red_.cost, red_.rows);
  Propagator prop(static_cast<int>(red_.orig_of.size()), red_.rows, red_.integral);
  const std::vector<double> base_lo = red_.lower, base_hi = red_.upper;

  LpStatus root = lp.solve();
  sol.nodes = 1;
  if (root == LpStatus::Infeasible) {
    sol.lp_iterations = lp.iterations();
    return finish(SolveStatus::Infeasible);
  }
  if (root == LpStatus::Unbounded) {
    sol.lp_iterations = lp.iterations();
    return finish(SolveStatus::Unbounded);
  }
  if (root == LpStatus::Optimal) {
    record_progress(0, internal_objective(lp));
    run_cut_rounds(lp, prop, sol);
    // Rounding heuristic on the root point.
    std::vector<double> x = lp.structural_values();
    for (std::size_t j = 0; j < x.size(); ++j)
      if (red_.integral[j]) x[j] = std::round(x[j]);
    const std::vector<double> full_values = expand(x);
    if (problem_.max_violation(full_values) <= 1e-9) offer_incumbent(x, sign_ * problem_.objective().evaluate(full_values), 0);
  }

  std::priority_queue<OpenNode, std::vector<OpenNode>, HeapOrder> heap;
  std::vector<OpenNode> dive;
  long next_id = 1;
  bool incomplete = false;
  bool limit_hit = false;
  std::vector<double> cur_lo = base_lo, cur_hi = base_hi;  // bounds loaded in the engine
  std::vector<double> node_lo, node_hi;
  std::vector<const NodeData*> chain;

  auto open_bound = [&]() {
    double b = kInf;
    if (!heap.empty()) b = std::min(b, heap.top().bound);
    for (const OpenNode& o : dive) b = std::min(b, o.bound);
    return b;
  };

  auto process = [&](const std::shared_ptr<NodeData>& data, bool is_root, double inherited) {
    if (!is_root) {
      node_lo = base_lo;
      node_hi = base_hi;
      chain.clear();
      for (const NodeData* p = data->parent.get(); p != nullptr; p = p->parent.get()) chain.push_back(p);
      for (auto it = chain.rbegin(); it != chain.rend(); ++it)
        for (const BoundChange& c : (*it)->changes) {
          node_lo[static_cast<std::size_t>(c.col)] = c.lower;
          node_hi[static_cast<std::size_t>(c.col)] = c.upper;
        }
      const std::vector<double> parent_lo = node_lo, parent_hi = node_hi;
      std::vector<int> seeds;
      for (const BoundChange& c : data->changes) {
        node_lo[static_cast<std::size_t>(c.col)] = std::max(node_lo[static_cast<std::size_t>(c.col)], c.lower);
        node_hi[static_cast<std::size_t>(c.col)] = std::min(node_hi[static_cast<std::size_t>(c.col)], c.upper);
        seeds.push_back(c.col);
      }
      for (int c : seeds)
        if (node_lo[static_cast<std::size_t>(c)] > node_hi[static_cast<std::size_t>(c)]) return;
      if (!prop.propagate(node_lo, node_hi, seeds)) return;
      data->changes.clear();
      for (std::size_t j = 0; j < node_lo.size(); ++j)
        if (node_lo[j] != parent_lo[j] || node_hi[j] != parent_hi[j])
          data->changes.push_back(BoundChange{static_cast<int>(j), node_lo[j], node_hi[j]});
      for (std::size_t j = 0; j < node_lo.size(); ++j) {
        if (node_lo[j] != cur_lo[j] || node_hi[j] != cur_hi[j]) {
          lp.set_bounds(static_cast<int>(j), node_lo[j], node_hi[j]);
          cur_lo[j] = node_lo[j];
          cur_hi[j] = node_hi[j];
        }
      }
      const LpStatus st = lp.solve();
      ++sol.nodes;
      if (st == LpStatus::Infeasible) return;
      if (st != LpStatus::Optimal) {
        incomplete = true;
        return;
      }
    }
    const double bound = std::max(internal_objective(lp), inherited);
    if (has_incumbent_ && bound >= incumbent_value_ - prune_tolerance()) return;
    const int col = pick_branch_column(lp);
    if (col < 0) {
      std::vector<double> x = lp.structural_values();
      for (std::size_t j = 0; j < x.size(); ++j)
        if (red_.integral[j]) x[j] = std::round(x[j]);
      const double value = sign_ * problem_.objective().evaluate(expand(x));
      const bool improved = !has_incumbent_ || value < incumbent_value_;
      offer_incumbent(x, value, sol.nodes);
      if (improved) {
        for (OpenNode& o : dive) heap.push(std::move(o));
        dive.clear();
        record_progress(sol.nodes, std::min(open_bound(), incumbent_value_));
      }
      return;
    }
    const double v = lp.value(col);
    const double f = v - std::floor(v);
    auto make_child = [&](double clo, double chi) {
      auto child = std::make_shared<NodeData>();
      child->parent = data;
      child->changes.push_back(BoundChange{col, clo, chi});
      return OpenNode{bound, next_id++, std::move(child)};
    };
    OpenNode down = make_child(-kInf, std::floor(v));
    OpenNode up = make_child(std::ceil(v), kInf);
    if (!has_incumbent_) {
      // Plunge: the preferred child goes on top of the stack.
      if (f >= 0.5) {
        dive.push_back(std::move(down));
        dive.push_back(std::move(up));
      } else {
        dive.push_back(std::move(up));
        dive.push_back(std::move(down));
      }
    } else {
      heap.push(std::move(down));
      heap.push(std::move(up));
    }
  };

  if (root == LpStatus::Optimal) {
    process(std::make_shared<NodeData>(), true, -kInf);
  } else {
    incomplete = true;
  }

  while (!heap.empty() || !dive.empty()) {
    if (out_of_time() || (config_.node_limit >= 0 && sol.nodes >= config_.node_limit)) {
      limit_hit = true;
      break;
    }
    OpenNode node;
    if (!dive.empty()) {
      node = std::move(dive.back());
      dive.pop_back();
    } else {
      node = heap.top();
      heap.pop();
    }
    if (has_incumbent_ && node.bound >= incumbent_value_ - prune_tolerance()) continue;
    process(node.data, false, node.bound);
  }

  sol.lp_iterations = lp.iterations();
  double bound = std::min(open_bound(), has_incumbent_ ? incumbent_value_ : kInf);
  if (!has_incumbent_) {
    if (limit_hit) {
      sol.best_bound = own(bound);
      return finish(SolveStatus::TimeLimit);
    }
    return finish(incomplete ? SolveStatus::TimeLimit : SolveStatus::Infeasible);
  }
  sol.values = expand(incumbent_);
  sol.objective = problem_.objective().evaluate(sol.values);
  if (problem_.secondary()) sol.secondary_objective = problem_.secondary()->evaluate(sol.values);
  sol.best_bound = own(bound);
  record_progress(sol.nodes, bound);
  if (limit_hit) {
    const bool time = out_of_time();
    return finish(time ? SolveStatus::TimeLimit : SolveStatus::Feasible);
  }
  return finish(incomplete ? SolveStatus::Feasible : SolveStatus::Optimal);
}

}  // namespace

Solution branch_and_bound(const MipProblem& problem, const SolveConfig& config, std::span<const double> hint) {
  if (!(config.gap_tolerance >= 0.0)) throw std::invalid_argument("gap tolerance must be nonnegative");
  Search search(problem, config, hint);
  return search.run();
}

Solution lexicographic_solve(const MipProblem& problem, const SolveConfig& config, std::span<const double> hint) {
  if (!problem.secondary()) throw std::invalid_argument("lexicographic_solve needs a secondary objective");
  const auto start = Clock::now();
  MipProblem stage1 = problem;
  stage1.clear_secondary();
  Solution first = branch_and_bound(stage1, config, hint);
  if (!first.has_solution()) {
    first.wall_seconds = seconds_since(start);
    return first;
  }
  const Objective& g = problem.objective();
  const double g_star = first.objective;
  const double eps = std::max(config.lex_relative_slack * std::fabs(g_star), 1e-9);

  MipProblem stage2 = problem;
  if (g.sense == Sense::Maximize)
    stage2.add_constraint("lex_primary", g.terms, Relation::GreaterEqual, g_star - eps - g.constant);
  else
    stage2.add_constraint("lex_primary", g.terms, Relation::LessEqual, g_star + eps - g.constant);
  stage2.set_objective(*problem.secondary());
  stage2.clear_secondary();
  SolveConfig cfg2 = config;
  if (std::isfinite(config.time_limit_seconds))
    cfg2.time_limit_seconds = std::max(0.0, config.time_limit_seconds - seconds_since(start));
  Solution second = branch_and_bound(stage2, cfg2, first.values);

  Solution out = second.has_solution() ? second : first;
  if (!second.has_solution()) out.status = first.status == SolveStatus::Optimal ? SolveStatus::Feasible : first.status;
  else if (first.status != SolveStatus::Optimal && second.status == SolveStatus::Optimal) out.status = first.status;
  out.objective = g.evaluate(out.values);
  out.secondary_objective = problem.secondary()->evaluate(out.values);
  out.primary_optimum = g_star;
  out.best_bound = second.has_solution() ? second.best_bound : first.best_bound;
  out.nodes = first.nodes + second.nodes;
  out.lp_iterations = first.lp_iterations + second.lp_iterations;
  out.gomory_cuts = first.gomory_cuts + second.gomory_cuts;
  out.cover_cuts = first.cover_cuts + second.cover_cuts;
  if (config.record_cuts) {
    out.cuts = first.cuts;
    out.cuts.insert(out.cuts.end(), second.cuts.begin(), second.cuts.end());
  }
  out.wall_seconds = seconds_since(start);
  return out;
}

}  // namespace fleetopt::mip
