#include "fleetopt/mip/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetopt::mip {

double Objective::evaluate(std::span<const double> values) const {
  double total = constant;
  for (const Term& t : terms) total += t.coef * values[static_cast<std::size_t>(t.var)];
  return total;
}

int MipProblem::add_variable(std::string name, VarKind kind, double lower, double upper) {
  if (kind == VarKind::Binary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  if (lower > upper) throw std::invalid_argument("variable '" + name + "' has lower > upper");
  const int index = num_variables();
  if (!by_name_.emplace(name, index).second)
    throw std::invalid_argument("duplicate variable name '" + name + "'");
  variables_.push_back(Variable{std::move(name), kind, lower, upper});
  return index;
}

int MipProblem::add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs) {
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= num_variables())
      throw std::invalid_argument("constraint '" + name + "' references unknown variable");
  }
  constraints_.push_back(Constraint{std::move(name), std::move(terms), relation, rhs});
  return num_constraints() - 1;
}

void MipProblem::set_bounds(int var, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("set_bounds: lower > upper");
  auto& v = variables_.at(static_cast<std::size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

void MipProblem::set_kind(int var, VarKind kind) {
  auto& v = variables_.at(static_cast<std::size_t>(var));
  v.kind = kind;
  if (kind == VarKind::Binary) {
    v.lower = std::max(v.lower, 0.0);
    v.upper = std::min(v.upper, 1.0);
    if (v.lower > v.upper) throw std::invalid_argument("variable '" + v.name + "' cannot be binary with its bounds");
  }
}

std::optional<int> MipProblem::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

int MipProblem::index_of(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw std::invalid_argument("unknown variable '" + name + "'");
  return *idx;
}

void MipProblem::validate() const {
  for (const Variable& v : variables_) {
    if (v.is_integral() && (!std::isfinite(v.lower) || !std::isfinite(v.upper)))
      throw std::invalid_argument("integer variable '" + v.name + "' needs finite bounds");
    if (v.lower > v.upper) throw std::invalid_argument("variable '" + v.name + "' has lower > upper");
  }
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const Term& t : terms) {
      if (t.var < 0 || t.var >= num_variables()) throw std::invalid_argument(where + ": dangling variable index");
      if (!std::isfinite(t.coef)) throw std::invalid_argument(where + ": non-finite coefficient");
    }
  };
  for (const Constraint& c : constraints_) {
    check_terms(c.terms, "constraint '" + c.name + "'");
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("constraint '" + c.name + "': non-finite rhs");
  }
  check_terms(objective_.terms, "objective");
  if (secondary_) check_terms(secondary_->terms, "secondary objective");
}

double MipProblem::max_violation(std::span<const double> values) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const Variable& v = variables_[i];
    const double x = values[i];
    worst = std::max({worst, v.lower - x, x - v.upper});
    if (v.is_integral()) worst = std::max(worst, std::fabs(x - std::round(x)));
  }
  for (const Constraint& c : constraints_) {
    double activity = 0.0;
    for (const Term& t : c.terms) activity += t.coef * values[static_cast<std::size_t>(t.var)];
    const double scale = std::max(1.0, std::fabs(c.rhs));
    double v = 0.0;
    if (c.relation != Relation::GreaterEqual) v = std::max(v, activity - c.rhs);
    if (c.relation != Relation::LessEqual) v = std::max(v, c.rhs - activity);
    worst = std::max(worst, v / scale);
  }
  return worst;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::TimeLimit: return "TimeLimit";
  }
  return "Unknown";
}

double CutRow::violation(std::span<const double> values) const {
  double activity = 0.0;
  for (const Term& t : terms) activity += t.coef * values[static_cast<std::size_t>(t.var)];
  switch (relation) {
    case Relation::LessEqual: return activity - rhs;
    case Relation::GreaterEqual: return rhs - activity;
    case Relation::Equal: return std::fabs(activity - rhs);
  }
  return 0.0;
}

MipProblem fix_variables(const MipProblem& problem, std::span<const std::pair<int, double>> assignments) {
  MipProblem fixed = problem;
  for (const auto& [var, value] : assignments) {
    if (var < 0 || var >= problem.num_variables()) throw std::invalid_argument("fix_variables: unknown variable index");
    const Variable& v = problem.variable(var);
    if (!std::isfinite(value)) throw std::invalid_argument("fix_variables: non-finite value for '" + v.name + "'");
    if (value < v.lower - 1e-9 || value > v.upper + 1e-9)
      throw std::invalid_argument("fix_variables: value outside bounds for '" + v.name + "'");
    if (v.is_integral() && std::fabs(value - std::round(value)) > 1e-9)
      throw std::invalid_argument("fix_variables: fractional value for integer variable '" + v.name + "'");
    const double clean = v.is_integral() ? std::round(value) : value;
    fixed.set_bounds(var, clean, clean);
  }
  return fixed;
}

}  // namespace fleetopt::mip
