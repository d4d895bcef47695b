#include "fleetopt/mip/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fleetopt::mip {

namespace {

constexpr double kMinViolation = 1e-7;
constexpr double kMaxDynamism = 1e6;

double frac(double v) { return v - std::floor(v); }

double activity(const std::vector<Term>& terms, std::span<const double> values) {
  double s = 0.0;
  for (const Term& t : terms) s += t.coef * values[static_cast<std::size_t>(t.var)];
  return s;
}

bool is_binary(double lo, double hi, char integral) { return integral && lo >= 0.0 && hi <= 1.0; }

}  // namespace

std::vector<CutRow> gomory_cuts(const LpEngine& lp, std::span<const char> integral, int max_cuts) {
  const int n = lp.num_structural();
  const int m = lp.num_rows();
  const int cols = lp.num_columns();
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = lp.value(j);

  struct Candidate {
    CutRow cut;
    double score;
  };
  std::vector<Candidate> found;
  std::vector<double> dense(static_cast<std::size_t>(n));

  for (int r = 0; r < m; ++r) {
    const int basic = lp.basic_column(r);
    if (basic >= n || !integral[static_cast<std::size_t>(basic)]) continue;
    const double beta = lp.value(basic);
    const double f0 = frac(beta);
    if (f0 < 1e-4 || f0 > 1.0 - 1e-4) continue;
    const auto row = lp.tableau_row(r);

    // Cut in nonbasic-slack space: sum g_j s_j >= 1, with s_j >= 0 the
    // distance of column j from its active bound. The tableau stores
    // x_B = -sum T_j x_j.
    std::fill(dense.begin(), dense.end(), 0.0);
    double rhs = 1.0;
    bool usable = true;
    for (int j = 0; j < cols && usable; ++j) {
      const double t = row[static_cast<std::size_t>(j)];
      if (t == 0.0 || j == basic) continue;
      const BasisStatus st = lp.status(j);
      if (st == BasisStatus::Basic) continue;
      if (std::fabs(t) < 1e-11) continue;
      if (st == BasisStatus::Free) {
        usable = false;
        break;
      }
      const bool at_lower = st == BasisStatus::AtLower;
      // Row form x_B + sum a_j s_j = beta.
      const double abar = at_lower ? t : -t;
      const bool int_col = j < n && integral[static_cast<std::size_t>(j)];
      double g;
      if (int_col) {
        const double fj = frac(abar);
        g = fj <= f0 ? fj / f0 : (1.0 - fj) / (1.0 - f0);
      } else {
        g = abar > 0 ? abar / f0 : -abar / (1.0 - f0);
      }
      if (g == 0.0) continue;
      // s_j = x_j - lo_j (at lower) or hi_j - x_j (at upper).
      const double bound = at_lower ? lp.lower(j) : lp.upper(j);
      const double sign = at_lower ? 1.0 : -1.0;
      rhs += sign * g * bound;
      if (j < n) {
        dense[static_cast<std::size_t>(j)] += sign * g;
      } else {
        // Logical column equals the row activity over structurals.
        for (const Term& term : lp.row(j - n).terms) dense[static_cast<std::size_t>(term.var)] += sign * g * term.coef;
      }
    }
    if (!usable) continue;

    CutRow cut;
    cut.family = "gomory";
    cut.relation = Relation::GreaterEqual;
    double max_abs = 0.0, min_abs = kInf;
    for (int j = 0; j < n; ++j) {
      double c = dense[static_cast<std::size_t>(j)];
      if (std::fabs(c) < 1e-12) continue;
      cut.terms.push_back(Term{j, c});
      max_abs = std::max(max_abs, std::fabs(c));
      min_abs = std::min(min_abs, std::fabs(c));
    }
    if (cut.terms.empty() || max_abs / min_abs > kMaxDynamism) continue;
    // Guard against roundoff in the tableau.
    cut.rhs = rhs - 1e-9 * (1.0 + std::fabs(rhs));
    const double violation = cut.rhs - activity(cut.terms, x);
    double norm = 0.0;
    for (const Term& t : cut.terms) norm += t.coef * t.coef;
    norm = std::sqrt(norm);
    if (violation < kMinViolation * std::max(1.0, max_abs)) continue;
    found.push_back(Candidate{std::move(cut), violation / norm});
  }
  std::stable_sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  std::vector<CutRow> out;
  for (auto& c : found) {
    if (static_cast<int>(out.size()) >= max_cuts) break;
    out.push_back(std::move(c.cut));
  }
  return out;
}

std::vector<CutRow> cover_cuts(std::span<const LpRow> rows, std::span<const double> lower,
                               std::span<const double> upper, std::span<const char> integral,
                               std::span<const double> values) {
  std::vector<CutRow> out;
  struct Item {
    int var;
    double a;
    bool complemented;
    double xv;
  };
  auto separate = [&](const LpRow& row, double sign, double bound) {
    // Knapsack: sum sign*coef x <= bound over binaries; fixed columns folded in.
    std::vector<Item> items;
    double b = bound;
    for (const Term& t : row.terms) {
      const auto j = static_cast<std::size_t>(t.var);
      const double a = sign * t.coef;
      if (a == 0.0) continue;
      if (lower[j] == upper[j]) {
        b -= a * lower[j];
        continue;
      }
      if (!is_binary(lower[j], upper[j], integral[j])) return;
      if (a > 0) {
        items.push_back(Item{t.var, a, false, values[j]});
      } else {
        items.push_back(Item{t.var, -a, true, 1.0 - values[j]});
        b -= a;
      }
    }
    if (items.size() < 2) return;
    double total = 0.0;
    for (const Item& it : items) total += it.a;
    if (total <= b + 1e-9) return;
    if (b < 0) return;
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
      return (1.0 - items[p].xv) / items[p].a < (1.0 - items[q].xv) / items[q].a;
    });
    std::vector<std::size_t> cover;
    double weight = 0.0;
    for (std::size_t idx : order) {
      cover.push_back(idx);
      weight += items[idx].a;
      if (weight > b + 1e-9) break;
    }
    if (weight <= b + 1e-9) return;
    // Drop members while the set stays a cover, least promising first.
    std::vector<std::size_t> by_x = cover;
    std::stable_sort(by_x.begin(), by_x.end(), [&](std::size_t p, std::size_t q) { return items[p].xv < items[q].xv; });
    for (std::size_t idx : by_x) {
      if (weight - items[idx].a > b + 1e-9) {
        weight -= items[idx].a;
        cover.erase(std::find(cover.begin(), cover.end(), idx));
      }
    }
    double amax = 0.0;
    for (std::size_t idx : cover) amax = std::max(amax, items[idx].a);
    std::vector<char> in_cover(items.size(), 0);
    for (std::size_t idx : cover) in_cover[idx] = 1;
    std::vector<std::size_t> members = cover;
    for (std::size_t idx = 0; idx < items.size(); ++idx)
      if (!in_cover[idx] && items[idx].a >= amax) members.push_back(idx);
    std::sort(members.begin(), members.end(), [&](std::size_t p, std::size_t q) { return items[p].var < items[q].var; });

    CutRow cut;
    cut.family = "cover";
    cut.relation = Relation::LessEqual;
    cut.rhs = static_cast<double>(cover.size()) - 1.0;
    double lhs = 0.0;
    for (std::size_t idx : members) {
      const Item& it = items[idx];
      lhs += it.xv;
      if (it.complemented) {
        cut.terms.push_back(Term{it.var, -1.0});
        cut.rhs -= 1.0;
      } else {
        cut.terms.push_back(Term{it.var, 1.0});
      }
    }
    if (lhs - (static_cast<double>(cover.size()) - 1.0) < kMinViolation) return;
    out.push_back(std::move(cut));
  };
  for (const LpRow& row : rows) {
    if (std::isfinite(row.upper)) separate(row, 1.0, row.upper);
    if (std::isfinite(row.lower)) separate(row, -1.0, -row.lower);
  }
  return out;
}

std::vector<CutRow> cover_cuts(const MipProblem& problem, std::span<const double> values) {
  std::vector<LpRow> rows;
  for (const Constraint& c : problem.constraints()) {
    LpRow row{c.terms, -kInf, kInf};
    if (c.relation != Relation::GreaterEqual) row.upper = c.rhs;
    if (c.relation != Relation::LessEqual) row.lower = c.rhs;
    rows.push_back(std::move(row));
  }
  std::vector<double> lo, hi;
  std::vector<char> integral;
  for (const Variable& v : problem.variables()) {
    lo.push_back(v.lower);
    hi.push_back(v.upper);
    integral.push_back(v.is_integral() ? 1 : 0);
  }
  return cover_cuts(rows, lo, hi, integral, values);
}

}  // namespace fleetopt::mip
