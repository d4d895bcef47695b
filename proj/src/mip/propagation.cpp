#include "fleetopt/mip/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace fleetopt::mip {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kIntTol = 1e-6;
constexpr int kMaxRowVisits = 50;

}  // namespace

Propagator::Propagator(int num_columns, std::vector<LpRow> rows, std::vector<char> integral)
    : n_(num_columns), integral_(std::move(integral)), col_rows_(static_cast<std::size_t>(num_columns)) {
  add_rows(rows);
}

void Propagator::add_rows(const std::vector<LpRow>& rows) {
  for (const LpRow& row : rows) {
    const int r = static_cast<int>(rows_.size());
    rows_.push_back(row);
    for (const Term& t : row.terms)
      if (t.coef != 0.0) col_rows_[static_cast<std::size_t>(t.var)].push_back(r);
  }
}

bool Propagator::tighten_row(int r, std::vector<double>& lower, std::vector<double>& upper,
                             std::vector<int>& changed) const {
  const LpRow& row = rows_[static_cast<std::size_t>(r)];
  // Finite parts of the activity range plus counts of infinite contributions.
  double min_act = 0.0, max_act = 0.0;
  int min_inf = 0, max_inf = 0;
  for (const Term& t : row.terms) {
    const double lo = lower[static_cast<std::size_t>(t.var)];
    const double hi = upper[static_cast<std::size_t>(t.var)];
    const double a = t.coef;
    if (a > 0) {
      if (std::isfinite(lo)) min_act += a * lo; else ++min_inf;
      if (std::isfinite(hi)) max_act += a * hi; else ++max_inf;
    } else if (a < 0) {
      if (std::isfinite(hi)) min_act += a * hi; else ++min_inf;
      if (std::isfinite(lo)) max_act += a * lo; else ++max_inf;
    }
  }
  double scale = 1.0;
  if (std::isfinite(row.lower)) scale = std::max(scale, 1.0 + std::fabs(row.lower));
  if (std::isfinite(row.upper)) scale = std::max(scale, 1.0 + std::fabs(row.upper));
  if (min_inf == 0 && std::isfinite(row.upper) && min_act > row.upper + 1e-6 * scale) return false;
  if (max_inf == 0 && std::isfinite(row.lower) && max_act < row.lower - 1e-6 * scale) return false;

  for (const Term& t : row.terms) {
    const auto j = static_cast<std::size_t>(t.var);
    const double a = t.coef;
    if (a == 0.0) continue;
    double& lo = lower[j];
    double& hi = upper[j];
    double new_lo = lo, new_hi = hi;
    // Residual activity range of the other terms.
    double rest_min = kInf, rest_max = -kInf;
    {
      const double own_min = a > 0 ? a * lo : a * hi;
      const bool own_min_inf = !std::isfinite(own_min);
      if (min_inf == 0 || (min_inf == 1 && own_min_inf)) rest_min = min_act - (own_min_inf ? 0.0 : own_min);
      const double own_max = a > 0 ? a * hi : a * lo;
      const bool own_max_inf = !std::isfinite(own_max);
      if (max_inf == 0 || (max_inf == 1 && own_max_inf)) rest_max = max_act - (own_max_inf ? 0.0 : own_max);
    }
    if (std::isfinite(row.upper) && std::isfinite(rest_min)) {
      const double bound = (row.upper - rest_min) / a;
      if (a > 0) new_hi = std::min(new_hi, bound);
      else new_lo = std::max(new_lo, bound);
    }
    if (std::isfinite(row.lower) && std::isfinite(rest_max)) {
      const double bound = (row.lower - rest_max) / a;
      if (a > 0) new_lo = std::max(new_lo, bound);
      else new_hi = std::min(new_hi, bound);
    }
    if (integral_[j]) {
      new_lo = std::ceil(new_lo - kIntTol);
      new_hi = std::floor(new_hi + kIntTol);
    } else {
      new_lo -= 1e-9 * (1.0 + std::fabs(new_lo));
      new_hi += 1e-9 * (1.0 + std::fabs(new_hi));
    }
    const double range = std::isfinite(hi - lo) ? hi - lo : 1.0;
    bool moved = false;
    if (new_lo > lo + std::max(1e-7, 1e-3 * range) || (integral_[j] && new_lo > lo + 0.5)) {
      lo = new_lo;
      moved = true;
    }
    if (new_hi < hi - std::max(1e-7, 1e-3 * range) || (integral_[j] && new_hi < hi - 0.5)) {
      hi = new_hi;
      moved = true;
    }
    if (lo > hi + kFeasTol * (1.0 + std::fabs(lo))) return false;
    if (lo > hi) hi = lo;
    if (moved) changed.push_back(t.var);
  }
  return true;
}

bool Propagator::propagate(std::vector<double>& lower, std::vector<double>& upper, std::span<const int> seeds) const {
  const int m = static_cast<int>(rows_.size());
  std::vector<char> queued(static_cast<std::size_t>(m), 0);
  std::vector<int> visits(static_cast<std::size_t>(m), 0);
  std::deque<int> work;
  auto enqueue_col = [&](int col) {
    for (int r : col_rows_[static_cast<std::size_t>(col)]) {
      if (!queued[static_cast<std::size_t>(r)]) {
        queued[static_cast<std::size_t>(r)] = 1;
        work.push_back(r);
      }
    }
  };
  if (seeds.empty()) {
    for (int r = 0; r < m; ++r) {
      queued[static_cast<std::size_t>(r)] = 1;
      work.push_back(r);
    }
  } else {
    for (int c : seeds) enqueue_col(c);
  }
  std::vector<int> changed;
  while (!work.empty()) {
    const int r = work.front();
    work.pop_front();
    queued[static_cast<std::size_t>(r)] = 0;
    if (++visits[static_cast<std::size_t>(r)] > kMaxRowVisits) continue;
    changed.clear();
    if (!tighten_row(r, lower, upper, changed)) return false;
    for (int c : changed) enqueue_col(c);
  }
  return true;
}

}  // namespace fleetopt::mip
