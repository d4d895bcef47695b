#include "fleetopt/mip/lp_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetopt::mip {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-13;
constexpr int kDegenerateLimit = 30;
constexpr int kRefreshInterval = 100;
constexpr double kPerturb = 1e-7;
constexpr double kResidualInfeasibility = 1e-7;
constexpr double kSuspectInfeasibility = 1e-5;

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

LpEngine::LpEngine(std::vector<double> col_lower, std::vector<double> col_upper, std::vector<double> cost,
                   std::vector<LpRow> rows)
    : n_(static_cast<int>(col_lower.size())), m_(static_cast<int>(rows.size())), rows_(std::move(rows)) {
  if (col_upper.size() != col_lower.size() || cost.size() != col_lower.size())
    throw std::invalid_argument("LpEngine: column vectors differ in length");
  stride_ = n_ + m_;
  lo_ = std::move(col_lower);
  hi_ = std::move(col_upper);
  cost_ = std::move(cost);
  for (const LpRow& row : rows_) {
    lo_.push_back(row.lower);
    hi_.push_back(row.upper);
    cost_.push_back(0.0);
    for (const Term& t : row.terms)
      if (t.var < 0 || t.var >= n_) throw std::invalid_argument("LpEngine: row references unknown column");
  }
  for (int j = 0; j < stride_; ++j)
    if (lo_[j] > hi_[j]) throw std::invalid_argument("LpEngine: lower bound exceeds upper bound");
  x_.assign(static_cast<std::size_t>(stride_), 0.0);
  status_.assign(static_cast<std::size_t>(stride_), BasisStatus::AtLower);
  for (int j = 0; j < n_; ++j) place_nonbasic(j);
  reset_to_slack_basis();
}

void LpEngine::place_nonbasic(int col) {
  const auto j = static_cast<std::size_t>(col);
  if (std::isfinite(lo_[j]) && (status_[j] != BasisStatus::AtUpper || !std::isfinite(hi_[j]))) {
    status_[j] = BasisStatus::AtLower;
    x_[j] = lo_[j];
  } else if (std::isfinite(hi_[j])) {
    status_[j] = BasisStatus::AtUpper;
    x_[j] = hi_[j];
  } else {
    status_[j] = BasisStatus::Free;
    x_[j] = 0.0;
  }
}

void LpEngine::reset_to_slack_basis() {
  tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(stride_), 0.0);
  head_.assign(static_cast<std::size_t>(m_), 0);
  row_of_.assign(static_cast<std::size_t>(stride_), -1);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : rows_[static_cast<std::size_t>(i)].terms) tab(i, t.var) -= t.coef;
    tab(i, n_ + i) = 1.0;
    head_[static_cast<std::size_t>(i)] = n_ + i;
    row_of_[static_cast<std::size_t>(n_ + i)] = i;
    status_[static_cast<std::size_t>(n_ + i)] = BasisStatus::Basic;
  }
  recompute_basic_values();
  d_valid_ = false;
}

std::span<const double> LpEngine::tableau_row(int row) const {
  return {tab_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(stride_),
          static_cast<std::size_t>(stride_)};
}

void LpEngine::set_bounds(int col, double lower, double upper) {
  if (col < 0 || col >= n_) throw std::invalid_argument("LpEngine::set_bounds: not a structural column");
  if (lower > upper) throw std::invalid_argument("LpEngine::set_bounds: lower > upper");
  const auto j = static_cast<std::size_t>(col);
  lo_[j] = lower;
  hi_[j] = upper;
  if (status_[j] == BasisStatus::Basic) return;
  const double old = x_[j];
  place_nonbasic(col);
  const double delta = x_[j] - old;
  if (delta == 0.0) return;
  for (int i = 0; i < m_; ++i) {
    const double a = tab(i, col);
    if (a != 0.0) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= a * delta;
  }
}

void LpEngine::add_rows(std::vector<LpRow> rows) {
  if (rows.empty()) return;
  const int added = static_cast<int>(rows.size());
  const int new_stride = stride_ + added;
  std::vector<double> next(static_cast<std::size_t>(m_ + added) * static_cast<std::size_t>(new_stride), 0.0);
  for (int i = 0; i < m_; ++i)
    std::copy_n(tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride_), stride_,
                next.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(new_stride));
  tab_ = std::move(next);
  const int old_m = m_;
  stride_ = new_stride;
  for (int r = 0; r < added; ++r) {
    LpRow& row = rows[static_cast<std::size_t>(r)];
    const int i = old_m + r;
    const int logical = n_ + i;
    lo_.push_back(row.lower);
    hi_.push_back(row.upper);
    cost_.push_back(0.0);
    d_.push_back(0.0);
    x_.push_back(0.0);
    status_.push_back(BasisStatus::Basic);
    row_of_.push_back(i);
    head_.push_back(logical);
    double* out = tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride_);
    double activity = 0.0;
    for (const Term& t : row.terms) {
      if (t.var < 0 || t.var >= n_) throw std::invalid_argument("LpEngine::add_rows: unknown column");
      out[t.var] += t.coef;
      activity += t.coef * x_[static_cast<std::size_t>(t.var)];
    }
    // Eliminate basic structurals so the row is written over nonbasics.
    for (const Term& t : row.terms) {
      const int br = row_of_[static_cast<std::size_t>(t.var)];
      if (br < 0 || br >= old_m) continue;
      const double f = out[t.var];
      if (f == 0.0) continue;
      const double* src = tab_.data() + static_cast<std::size_t>(br) * static_cast<std::size_t>(stride_);
      for (int c = 0; c < n_ + old_m; ++c)
        if (src[c] != 0.0) out[c] -= f * src[c];
      out[t.var] = 0.0;
    }
    for (int c = 0; c < n_ + old_m; ++c) out[c] = -out[c];
    out[logical] = 1.0;
    x_[static_cast<std::size_t>(logical)] = activity;
    rows_.push_back(std::move(row));
  }
  m_ += added;
  d_valid_ = false;
}

void LpEngine::recompute_basic_values() {
  std::vector<int> moving;
  for (int j = 0; j < stride_; ++j)
    if (status_[static_cast<std::size_t>(j)] != BasisStatus::Basic && x_[static_cast<std::size_t>(j)] != 0.0)
      moving.push_back(j);
  for (int i = 0; i < m_; ++i) {
    double s = 0.0;
    const double* r = tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride_);
    for (int j : moving) s += r[j] * x_[static_cast<std::size_t>(j)];
    x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = -s;
  }
}

void LpEngine::recompute_reduced_costs() {
  d_ = cost_;
  for (int i = 0; i < m_; ++i) {
    const double cb = cost_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
    if (cb == 0.0) continue;
    const double* r = tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride_);
    for (int j = 0; j < stride_; ++j)
      if (r[j] != 0.0) d_[static_cast<std::size_t>(j)] -= cb * r[j];
  }
  for (int i = 0; i < m_; ++i) d_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = 0.0;
  d_valid_ = true;
}

double LpEngine::max_infeasibility() const {
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    const auto h = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
    worst = std::max({worst, lo_[h] - x_[h], x_[h] - hi_[h]});
  }
  return worst;
}

double LpEngine::max_row_residual() const {
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    double activity = 0.0;
    for (const Term& t : rows_[static_cast<std::size_t>(i)].terms) activity += t.coef * x_[static_cast<std::size_t>(t.var)];
    const double logical = x_[static_cast<std::size_t>(n_ + i)];
    worst = std::max(worst, std::fabs(activity - logical) / (1.0 + std::fabs(activity)));
  }
  return worst;
}

bool LpEngine::reinvert() {
  std::vector<int> structural_basics;
  std::vector<char> wanted(static_cast<std::size_t>(stride_), 0);
  for (int i = 0; i < m_; ++i) {
    const int c = head_[static_cast<std::size_t>(i)];
    wanted[static_cast<std::size_t>(c)] = 1;
    if (c < n_) structural_basics.push_back(c);
  }
  std::vector<BasisStatus> saved_status = status_;
  tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(stride_), 0.0);
  row_of_.assign(static_cast<std::size_t>(stride_), -1);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : rows_[static_cast<std::size_t>(i)].terms) tab(i, t.var) -= t.coef;
    tab(i, n_ + i) = 1.0;
    head_[static_cast<std::size_t>(i)] = n_ + i;
    row_of_[static_cast<std::size_t>(n_ + i)] = i;
  }
  bool repaired = false;
  for (int j : structural_basics) {
    int best = -1;
    double best_abs = 1e-9;
    for (int i = 0; i < m_; ++i) {
      const int h = head_[static_cast<std::size_t>(i)];
      if (h < n_ || wanted[static_cast<std::size_t>(h)]) continue;
      const double a = std::fabs(tab(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best < 0) {
      // Singular: keep the logical and push j to a bound.
      status_[static_cast<std::size_t>(j)] = BasisStatus::AtLower;
      place_nonbasic(j);
      repaired = true;
      continue;
    }
    const int leaving = head_[static_cast<std::size_t>(best)];
    pivot(best, j);
    status_[static_cast<std::size_t>(leaving)] = saved_status[static_cast<std::size_t>(leaving)];
    if (status_[static_cast<std::size_t>(leaving)] == BasisStatus::Basic) status_[static_cast<std::size_t>(leaving)] = BasisStatus::AtLower;
    place_nonbasic(leaving);
  }
  for (int i = 0; i < m_; ++i) status_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = BasisStatus::Basic;
  recompute_basic_values();
  d_valid_ = false;
  return !repaired;
}

void LpEngine::pivot(int r, int q) {
  double* rp = tab_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(stride_);
  const double inv = 1.0 / rp[q];
  pivot_nz_.clear();
  for (int j = 0; j < stride_; ++j) {
    if (rp[j] == 0.0) continue;
    rp[j] *= inv;
    if (std::fabs(rp[j]) < kDropTol) {
      rp[j] = 0.0;
    } else {
      pivot_nz_.push_back(j);
    }
  }
  rp[q] = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* ri = tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride_);
    const double f = ri[q];
    if (f == 0.0) continue;
    for (int j : pivot_nz_) {
      double v = ri[j] - f * rp[j];
      if (std::fabs(v) < kDropTol) v = 0.0;
      ri[j] = v;
    }
    ri[q] = 0.0;
  }
  if (d_valid_) {
    const double f = d_[static_cast<std::size_t>(q)];
    if (f != 0.0)
      for (int j : pivot_nz_) d_[static_cast<std::size_t>(j)] -= f * rp[j];
    d_[static_cast<std::size_t>(q)] = 0.0;
  }
  const int leaving = head_[static_cast<std::size_t>(r)];
  row_of_[static_cast<std::size_t>(leaving)] = -1;
  head_[static_cast<std::size_t>(r)] = q;
  row_of_[static_cast<std::size_t>(q)] = r;
}

int LpEngine::price(const std::vector<double>& d, bool bland, int& direction) const {
  int best = -1;
  double best_score = 0.0;
  for (int j = 0; j < stride_; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const BasisStatus st = status_[sj];
    if (st == BasisStatus::Basic || lo_[sj] == hi_[sj]) continue;
    const double dj = d[sj];
    int dir = 0;
    if (st == BasisStatus::AtLower && dj < -kDualTol) dir = 1;
    else if (st == BasisStatus::AtUpper && dj > kDualTol) dir = -1;
    else if (st == BasisStatus::Free && std::fabs(dj) > kDualTol) dir = dj < 0 ? 1 : -1;
    if (dir == 0) continue;
    if (bland) {
      direction = dir;
      return j;
    }
    const double score = std::fabs(dj);
    if (score > best_score) {
      best_score = score;
      best = j;
      direction = dir;
    }
  }
  return best;
}

bool LpEngine::dual_feasible() const {
  for (int j = 0; j < stride_; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (status_[sj] == BasisStatus::Basic || lo_[sj] == hi_[sj]) continue;
    const double dj = d_[sj];
    if (status_[sj] == BasisStatus::AtLower && dj < -kDualTol) return false;
    if (status_[sj] == BasisStatus::AtUpper && dj > kDualTol) return false;
    if (status_[sj] == BasisStatus::Free && std::fabs(dj) > kDualTol) return false;
  }
  return true;
}

LpEngine::DualOutcome LpEngine::dual_phase(long& iter, long max_iterations) {
  // Shift nonbasic costs away from zero to break dual degeneracy; the true
  // costs come back on exit and the primal pass repairs what is left.
  const std::vector<double> saved = cost_;
  for (int j = 0; j < stride_; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (status_[sj] == BasisStatus::Basic || status_[sj] == BasisStatus::Free || lo_[sj] == hi_[sj]) continue;
    const double eps = kPerturb * (1.0 + std::fabs(cost_[sj])) * (1.0 + static_cast<double>((j * 7919) % 97) / 97.0);
    const double shift = status_[sj] == BasisStatus::AtLower ? eps : -eps;
    cost_[sj] += shift;
    d_[sj] += shift;
  }
  const DualOutcome out = dual_iterate(iter, max_iterations);
  cost_ = saved;
  recompute_reduced_costs();
  return out;
}

LpEngine::DualOutcome LpEngine::dual_iterate(long& iter, long max_iterations) {
  std::vector<int> eligible;
  for (long local = 0;; ++local) {
    if (iter >= max_iterations || local > 5L * (m_ + 10)) return DualOutcome::GaveUp;
    if (local > 0 && local % kRefreshInterval == 0) {
      recompute_basic_values();
      recompute_reduced_costs();
      if (!dual_feasible()) return DualOutcome::GaveUp;
    }
    int r = -1;
    double worst = kPrimalTol;
    int s = 0;
    for (int i = 0; i < m_; ++i) {
      const auto h = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      const double below = lo_[h] - x_[h], above = x_[h] - hi_[h];
      if (below > worst) {
        worst = below;
        r = i;
        s = 1;
      } else if (above > worst) {
        worst = above;
        r = i;
        s = -1;
      }
    }
    if (r < 0) return DualOutcome::PrimalFeasible;

    // Entering column: keeps every reduced cost on its feasible side (Harris two-pass).
    const double* row = tab_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(stride_);
    eligible.clear();
    double bound_ratio = kInf;
    for (int j = 0; j < stride_; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const BasisStatus st = status_[sj];
      if (st == BasisStatus::Basic || lo_[sj] == hi_[sj]) continue;
      const double a = row[j] * s;
      if (std::fabs(a) < kPivotTol) continue;
      if ((st == BasisStatus::AtLower && a > 0) || (st == BasisStatus::AtUpper && a < 0)) continue;
      eligible.push_back(j);
      bound_ratio = std::min(bound_ratio, (std::fabs(d_[sj]) + kDualTol) / std::fabs(a));
    }
    if (eligible.empty()) return DualOutcome::Infeasible;
    int q = -1;
    double best_alpha = 0.0;
    for (int j : eligible) {
      const double a = std::fabs(row[j]);
      if (std::fabs(d_[static_cast<std::size_t>(j)]) / a <= bound_ratio && a > best_alpha) {
        best_alpha = a;
        q = j;
      }
    }
    const auto sq = static_cast<std::size_t>(q);
    const int leaving = head_[static_cast<std::size_t>(r)];
    const auto sl = static_cast<std::size_t>(leaving);
    const double target = s > 0 ? lo_[sl] : hi_[sl];
    // x_r = -sum alpha_j x_j, so moving x_q by delta moves x_r by -alpha_q delta.
    const double delta = -(target - x_[sl]) / row[q];
    for (int i = 0; i < m_; ++i) {
      const double a = tab(i, q);
      if (a != 0.0) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= a * delta;
    }
    x_[sq] += delta;
    pivot(r, q);
    status_[sq] = BasisStatus::Basic;
    x_[sl] = target;
    status_[sl] = s > 0 ? BasisStatus::AtLower : BasisStatus::AtUpper;
    // Clean up reduced costs that drifted past zero.
    for (int j : eligible) {
      const auto sj = static_cast<std::size_t>(j);
      if (status_[sj] == BasisStatus::AtLower && d_[sj] < 0.0 && d_[sj] > -kDualTol) d_[sj] = 0.0;
      if (status_[sj] == BasisStatus::AtUpper && d_[sj] > 0.0 && d_[sj] < kDualTol) d_[sj] = 0.0;
    }
    ++iter;
    ++total_iterations_;
  }
}

LpStatus LpEngine::solve(long max_iterations) {
  if (max_iterations < 0) max_iterations = 50L * (n_ + m_) + 10000;
  long iter = 0;
  int reinverts = 0;
  bool bland = false;
  int degenerate_run = 0;
  std::vector<double> d1;
  std::vector<double> phase1_cost(static_cast<std::size_t>(m_), 0.0);
  double feas_tol = kPrimalTol;
  bool stuck_reinverted = false;
  recompute_basic_values();

  if (!d_valid_) recompute_reduced_costs();
  if (dual_feasible()) {
    const DualOutcome out = dual_phase(iter, max_iterations);
    if (out == DualOutcome::Infeasible) {
      // Confirm with a fresh factorization before trusting the verdict.
      reinvert();
      recompute_reduced_costs();
      if (dual_feasible() && dual_phase(iter, max_iterations) == DualOutcome::Infeasible) return LpStatus::Infeasible;
    }
    recompute_basic_values();
  }

  while (true) {
    if (iter >= max_iterations) return LpStatus::IterationLimit;
    if (iter > 0 && iter % kRefreshInterval == 0) recompute_basic_values();

    phase1_cost.assign(static_cast<std::size_t>(m_), 0.0);
    bool infeasible = false;
    for (int i = 0; i < m_; ++i) {
      const auto h = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      if (x_[h] < lo_[h] - feas_tol) {
        phase1_cost[static_cast<std::size_t>(i)] = -1.0;
        infeasible = true;
      } else if (x_[h] > hi_[h] + feas_tol) {
        phase1_cost[static_cast<std::size_t>(i)] = 1.0;
        infeasible = true;
      }
    }

    int direction = 0;
    int q = -1;
    if (infeasible) {
      d1.assign(static_cast<std::size_t>(stride_), 0.0);
      for (int i = 0; i < m_; ++i) {
        const double c = phase1_cost[static_cast<std::size_t>(i)];
        if (c == 0.0) continue;
        const double* r = tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride_);
        for (int j = 0; j < stride_; ++j)
          if (r[j] != 0.0) d1[static_cast<std::size_t>(j)] -= c * r[j];
      }
      q = price(d1, bland, direction);
      if (q < 0) {
        if (reinverts < 2 && max_row_residual() > 1e-7) {
          ++reinverts;
          reinvert();
          continue;
        }
        // A near-feasible dead end is usually tableau drift: refactorize
        // once, then accept a residue below kResidualInfeasibility.
        const double residue = max_infeasibility();
        if (!stuck_reinverted && residue <= kSuspectInfeasibility) {
          stuck_reinverted = true;
          reinvert();
          continue;
        }
        if (feas_tol == kPrimalTol && residue <= kResidualInfeasibility) {
          feas_tol = kResidualInfeasibility;
          continue;
        }
        return LpStatus::Infeasible;
      }
    } else {
      if (!d_valid_) recompute_reduced_costs();
      q = price(d_, bland, direction);
      if (q < 0) {
        recompute_reduced_costs();
        q = price(d_, bland, direction);
      }
      if (q < 0) {
        if (reinverts < 2 && max_row_residual() > 1e-7) {
          ++reinverts;
          reinvert();
          continue;
        }
        return LpStatus::Optimal;
      }
    }

    // Ratio test (Harris two-pass; plain min-ratio under Bland).
    const auto sq = static_cast<std::size_t>(q);
    double theta_max = kInf;
    for (int i = 0; i < m_; ++i) {
      const double a = -tab(i, q) * direction;
      if (std::fabs(a) < kPivotTol) continue;
      const auto h = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      const double xv = x_[h];
      const double pc = phase1_cost[static_cast<std::size_t>(i)];
      double relaxed = kInf;
      if (pc < 0.0) {
        if (a > 0) relaxed = (lo_[h] + kPrimalTol - xv) / a;
      } else if (pc > 0.0) {
        if (a < 0) relaxed = (hi_[h] - kPrimalTol - xv) / a;
      } else if (a > 0) {
        if (std::isfinite(hi_[h])) relaxed = (hi_[h] + kPrimalTol - xv) / a;
      } else if (std::isfinite(lo_[h])) {
        relaxed = (lo_[h] - kPrimalTol - xv) / a;
      }
      theta_max = std::min(theta_max, std::max(0.0, relaxed));
    }
    int leave_row = -1;
    double theta = kInf;
    double leave_bound = 0.0;
    double best_alpha = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double a = -tab(i, q) * direction;
      if (std::fabs(a) < kPivotTol) continue;
      const auto h = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      const double xv = x_[h];
      const double pc = phase1_cost[static_cast<std::size_t>(i)];
      double bound = 0.0;
      bool blocks = false;
      if (pc < 0.0) {
        if (a > 0) { bound = lo_[h]; blocks = true; }
      } else if (pc > 0.0) {
        if (a < 0) { bound = hi_[h]; blocks = true; }
      } else if (a > 0) {
        if (std::isfinite(hi_[h])) { bound = hi_[h]; blocks = true; }
      } else if (std::isfinite(lo_[h])) {
        bound = lo_[h];
        blocks = true;
      }
      if (!blocks) continue;
      const double ratio = std::max(0.0, (bound - xv) / a);
      if (bland) {
        if (ratio < theta - 1e-12 ||
            (ratio <= theta + 1e-12 && leave_row >= 0 && head_[static_cast<std::size_t>(i)] < head_[static_cast<std::size_t>(leave_row)])) {
          theta = ratio;
          leave_row = i;
          leave_bound = bound;
        }
      } else if (ratio <= theta_max && std::fabs(a) > best_alpha) {
        best_alpha = std::fabs(a);
        theta = ratio;
        leave_row = i;
        leave_bound = bound;
      }
    }
    const double range = hi_[sq] - lo_[sq];
    const bool flip = std::isfinite(range) && range <= theta;
    if (leave_row < 0 && !flip) {
      if (infeasible) {
        if (reinverts < 2) {
          ++reinverts;
          reinvert();
          continue;
        }
        return LpStatus::Infeasible;
      }
      return LpStatus::Unbounded;
    }
    const double step = flip ? range : theta;

    double max_move = 0.0;
    if (step != 0.0) {
      for (int i = 0; i < m_; ++i) {
        const double a = -tab(i, q) * direction;
        if (a == 0.0) continue;
        x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] += a * step;
        max_move = std::max(max_move, std::fabs(a * step));
      }
    }
    x_[sq] += direction * step;

    if (step * std::max(1.0, max_move) < 1e-12) {
      if (++degenerate_run > kDegenerateLimit) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    if (flip) {
      status_[sq] = direction > 0 ? BasisStatus::AtUpper : BasisStatus::AtLower;
      x_[sq] = direction > 0 ? hi_[sq] : lo_[sq];
    } else {
      const int leaving = head_[static_cast<std::size_t>(leave_row)];
      const auto sl = static_cast<std::size_t>(leaving);
      if (infeasible) d_valid_ = false;
      pivot(leave_row, q);
      status_[sq] = BasisStatus::Basic;
      x_[sl] = leave_bound;
      status_[sl] = (leave_bound == lo_[sl]) ? BasisStatus::AtLower : BasisStatus::AtUpper;
    }
    ++iter;
    ++total_iterations_;
  }
}

double LpEngine::objective() const {
  double total = 0.0;
  for (int j = 0; j < n_; ++j) total += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
  return total;
}

std::vector<double> LpEngine::structural_values() const {
  return {x_.begin(), x_.begin() + n_};
}

LpResult lp_solve(const MipProblem& problem) {
  problem.validate();
  const int n = problem.num_variables();
  std::vector<double> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n)), cost(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    lo[static_cast<std::size_t>(j)] = problem.variable(j).lower;
    hi[static_cast<std::size_t>(j)] = problem.variable(j).upper;
  }
  const double sign = problem.objective().sense == Sense::Maximize ? -1.0 : 1.0;
  for (const Term& t : problem.objective().terms) cost[static_cast<std::size_t>(t.var)] += sign * t.coef;
  std::vector<LpRow> rows;
  for (const Constraint& c : problem.constraints()) {
    LpRow row{c.terms, -kInf, kInf};
    if (c.relation != Relation::GreaterEqual) row.upper = c.rhs;
    if (c.relation != Relation::LessEqual) row.lower = c.rhs;
    rows.push_back(std::move(row));
  }
  LpEngine engine(std::move(lo), std::move(hi), std::move(cost), std::move(rows));
  LpResult result;
  result.status = engine.solve();
  result.iterations = engine.iterations();
  if (result.status == LpStatus::Optimal) {
    result.values = engine.structural_values();
    result.objective = problem.objective().evaluate(result.values);
    for (int i = 0; i < engine.num_rows(); ++i) result.basis.push_back(engine.basic_column(i));
  }
  return result;
}

}  // namespace fleetopt::mip
