#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fleetopt::mip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Integer, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;

  bool is_integral() const { return kind != VarKind::Continuous; }
};

struct Term {
  int var = 0;
  double coef = 0.0;
  bool operator==(const Term&) const = default;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct Objective {
  Sense sense = Sense::Maximize;
  std::vector<Term> terms;
  double constant = 0.0;

  double evaluate(std::span<const double> values) const;
};

/// A mixed-integer linear program with an optional secondary objective for
/// lexicographic solves.
class MipProblem {
 public:
  int add_variable(std::string name, VarKind kind, double lower, double upper);
  int add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);

  void set_objective(Objective objective) { objective_ = std::move(objective); }
  void set_secondary(Objective objective) { secondary_ = std::move(objective); }
  void clear_secondary() { secondary_.reset(); }

  /// Tightens a variable's bounds in place (no validation beyond lo <= hi).
  void set_bounds(int var, double lower, double upper);
  /// Changes the kind; Binary also clamps the bounds to [0, 1].
  void set_kind(int var, VarKind kind);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Variable& variable(int i) const { return variables_.at(static_cast<std::size_t>(i)); }
  const Objective& objective() const { return objective_; }
  Objective& objective() { return objective_; }
  const std::optional<Objective>& secondary() const { return secondary_; }

  std::optional<int> find(const std::string& name) const;
  int index_of(const std::string& name) const;

  /// Throws std::invalid_argument when an invariant is broken: non-finite
  /// bounds on integer variables, non-finite coefficients, dangling indices.
  void validate() const;

  /// Max violation of bounds, rows, and integrality at `values`.
  double max_violation(std::span<const double> values) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::unordered_map<std::string, int> by_name_;
  Objective objective_;
  std::optional<Objective> secondary_;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, Unbounded, TimeLimit };

const char* to_string(SolveStatus status);

enum class BranchRule { MostFractional };

struct CutOptions {
  bool gomory = false;
  bool cover = false;
  int max_rounds = 10;       // per family, root node only
  int max_gomory_per_round = 50;
};

struct SolveConfig {
  double gap_tolerance = 1e-6;  // relative
  double time_limit_seconds = kInf;
  long node_limit = -1;
  BranchRule branching = BranchRule::MostFractional;
  CutOptions cuts;
  double lex_relative_slack = 1e-6;
  std::optional<unsigned long long> tie_seed;  // unused unless set
  bool record_progress = false;
  bool record_cuts = false;
};

struct ProgressPoint {
  long node = 0;
  double incumbent = 0.0;  // in the objective's own sense; NaN when none
  double bound = 0.0;
};

/// A generated cut in the problem's variable space: terms relation rhs.
struct CutRow {
  std::string family;
  std::vector<Term> terms;
  Relation relation = Relation::GreaterEqual;
  double rhs = 0.0;

  double violation(std::span<const double> values) const;
};

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
  std::optional<double> secondary_objective;
  double best_bound = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  int gomory_cuts = 0;
  int cover_cuts = 0;
  double wall_seconds = 0.0;
  /// Stage-1 optimum when produced by lexicographic_solve.
  std::optional<double> primary_optimum;
  std::vector<ProgressPoint> progress;
  std::vector<CutRow> cuts;

  bool has_solution() const { return !values.empty(); }
};

/// Copy of `problem` with lb = ub = value for each assignment. Throws
/// std::invalid_argument for unknown indices, values outside the current
/// bounds, or fractional values on integer variables.
MipProblem fix_variables(const MipProblem& problem, std::span<const std::pair<int, double>> assignments);

}  // namespace fleetopt::mip
