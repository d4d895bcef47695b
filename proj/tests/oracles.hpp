#pragma once

// Brute-force reference solvers shared by the test binaries.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fleetopt/mip/problem.hpp"

namespace oracle {

using fleetopt::mip::MipProblem;

inline bool row_ok(const fleetopt::mip::Constraint& c, const std::vector<double>& x, double tol = 1e-9) {
  double a = 0.0;
  for (const auto& t : c.terms) a += t.coef * x[static_cast<std::size_t>(t.var)];
  const double s = tol * std::max(1.0, std::fabs(c.rhs));
  switch (c.relation) {
    case fleetopt::mip::Relation::LessEqual: return a <= c.rhs + s;
    case fleetopt::mip::Relation::GreaterEqual: return a >= c.rhs - s;
    case fleetopt::mip::Relation::Equal: return std::fabs(a - c.rhs) <= s;
  }
  return false;
}

/// Visits every integer point of an all-integer problem that satisfies all rows.
inline void for_each_feasible(const MipProblem& p, const std::function<void(const std::vector<double>&)>& visit) {
  const int n = p.num_variables();
  std::vector<double> x(static_cast<std::size_t>(n));
  std::function<void(int)> rec = [&](int j) {
    if (j == n) {
      for (const auto& c : p.constraints())
        if (!row_ok(c, x)) return;
      visit(x);
      return;
    }
    const auto& v = p.variable(j);
    for (double k = std::ceil(v.lower); k <= std::floor(v.upper); k += 1.0) {
      x[static_cast<std::size_t>(j)] = k;
      rec(j + 1);
    }
  };
  rec(0);
}

struct Best {
  double value;
  std::vector<double> x;
};

inline std::optional<Best> enumerate_best(const MipProblem& p, const fleetopt::mip::Objective& obj) {
  std::optional<Best> best;
  const bool max = obj.sense == fleetopt::mip::Sense::Maximize;
  for_each_feasible(p, [&](const std::vector<double>& x) {
    const double v = obj.evaluate(x);
    if (!best || (max ? v > best->value : v < best->value)) best = Best{v, x};
  });
  return best;
}

/// LP optimum by vertex enumeration over all n-subsets of tight constraints
/// (rows and finite bounds). Only for tiny n.
inline std::optional<double> lp_vertex_optimum(const MipProblem& p) {
  const int n = p.num_variables();
  struct Plane {
    std::vector<double> a;
    double b;
  };
  std::vector<Plane> planes;
  for (const auto& c : p.constraints()) {
    Plane pl{std::vector<double>(static_cast<std::size_t>(n), 0.0), c.rhs};
    for (const auto& t : c.terms) pl.a[static_cast<std::size_t>(t.var)] += t.coef;
    planes.push_back(pl);
  }
  for (int j = 0; j < n; ++j) {
    const auto& v = p.variable(j);
    for (double b : {v.lower, v.upper}) {
      if (!std::isfinite(b)) continue;
      Plane pl{std::vector<double>(static_cast<std::size_t>(n), 0.0), b};
      pl.a[static_cast<std::size_t>(j)] = 1.0;
      planes.push_back(pl);
    }
  }
  std::optional<double> best;
  const bool max = p.objective().sense == fleetopt::mip::Sense::Maximize;
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(pick.size()) == n) {
      // Gaussian elimination with partial pivoting.
      std::vector<std::vector<double>> m;
      for (int i : pick) {
        auto row = planes[static_cast<std::size_t>(i)].a;
        row.push_back(planes[static_cast<std::size_t>(i)].b);
        m.push_back(row);
      }
      for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
          if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
        if (std::fabs(m[piv][c]) < 1e-10) return;
        std::swap(m[c], m[piv]);
        for (int r = 0; r < n; ++r) {
          if (r == c) continue;
          const double f = m[r][c] / m[c][c];
          for (int k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
        }
      }
      std::vector<double> x(static_cast<std::size_t>(n));
      for (int c = 0; c < n; ++c) x[static_cast<std::size_t>(c)] = m[c][n] / m[c][c];
      for (int j = 0; j < n; ++j) {
        const auto& v = p.variable(j);
        if (x[static_cast<std::size_t>(j)] < v.lower - 1e-7 || x[static_cast<std::size_t>(j)] > v.upper + 1e-7) return;
      }
      for (const auto& c : p.constraints())
        if (!row_ok(c, x, 1e-7)) return;
      const double val = p.objective().evaluate(x);
      if (!best || (max ? val > *best : val < *best)) best = val;
      return;
    }
    for (int i = start; i < static_cast<int>(planes.size()); ++i) {
      pick.push_back(i);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

}  // namespace oracle
