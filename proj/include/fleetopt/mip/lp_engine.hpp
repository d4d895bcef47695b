#pragma once

#include <span>
#include <vector>

#include "fleetopt/mip/problem.hpp"

namespace fleetopt::mip {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

/// One row of an LP in range form: lower <= sum(terms) <= upper.
struct LpRow {
  std::vector<Term> terms;
  double lower = -kInf;
  double upper = kInf;
};

enum class BasisStatus : unsigned char { Basic, AtLower, AtUpper, Free };

/// Bounded-variable primal simplex on a dense tableau.
///
/// Every row i owns a logical column n + i whose value equals the row
/// activity and whose bounds are the row bounds, so the system is
/// [A | -I] z = 0 with box bounds on every z. The tableau holds
/// B^-1 [A | -I]; basic columns form an identity. Bounds may be changed
/// between solves and rows appended; the basis is kept, so a following
/// solve starts warm: a dual simplex pass when the basis is still dual
/// feasible (the usual case after bound changes), otherwise phase 1 on the
/// sum of infeasibilities. The objective is always minimized.
class LpEngine {
 public:
  LpEngine(std::vector<double> col_lower, std::vector<double> col_upper, std::vector<double> cost,
           std::vector<LpRow> rows);

  int num_structural() const { return n_; }
  int num_rows() const { return m_; }
  int num_columns() const { return n_ + m_; }

  void set_bounds(int col, double lower, double upper);
  double lower(int col) const { return lo_[static_cast<std::size_t>(col)]; }
  double upper(int col) const { return hi_[static_cast<std::size_t>(col)]; }

  void add_rows(std::vector<LpRow> rows);

  LpStatus solve(long max_iterations = -1);

  double objective() const;
  double value(int col) const { return x_[static_cast<std::size_t>(col)]; }
  std::vector<double> structural_values() const;

  BasisStatus status(int col) const { return status_[static_cast<std::size_t>(col)]; }
  int basic_column(int row) const { return head_[static_cast<std::size_t>(row)]; }
  int row_of(int col) const { return row_of_[static_cast<std::size_t>(col)]; }
  std::span<const double> tableau_row(int row) const;
  const LpRow& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

  long iterations() const { return total_iterations_; }

 private:
  double& tab(int r, int c) { return tab_[static_cast<std::size_t>(r) * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(c)]; }
  double tab(int r, int c) const { return tab_[static_cast<std::size_t>(r) * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(c)]; }

  void reset_to_slack_basis();
  void place_nonbasic(int col);
  void recompute_basic_values();
  void recompute_reduced_costs();
  bool reinvert();
  void pivot(int r, int q);
  double max_row_residual() const;
  double max_infeasibility() const;
  int price(const std::vector<double>& d, bool bland, int& direction) const;
  bool dual_feasible() const;
  enum class DualOutcome { PrimalFeasible, Infeasible, GaveUp };
  DualOutcome dual_phase(long& iter, long max_iterations);
  DualOutcome dual_iterate(long& iter, long max_iterations);

  int n_ = 0;
  int m_ = 0;
  int stride_ = 0;  // == n_ + m_
  std::vector<double> lo_, hi_, x_, cost_, d_;
  std::vector<BasisStatus> status_;
  std::vector<int> head_;
  std::vector<int> row_of_;
  std::vector<double> tab_;
  std::vector<LpRow> rows_;
  std::vector<int> pivot_nz_;
  bool d_valid_ = false;
  long total_iterations_ = 0;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;   // in the problem's own sense
  std::vector<int> basis;   // basic column per row
  long iterations = 0;
};

/// Solves the continuous relaxation of `problem` (primary objective).
LpResult lp_solve(const MipProblem& problem);

}  // namespace fleetopt::mip
