#pragma once

#include <span>
#include <vector>

#include "fleetopt/mip/lp_engine.hpp"

namespace fleetopt::mip {

/// Activity-based bound tightening over range rows. Integer columns are
/// rounded inward after every tightening.
class Propagator {
 public:
  Propagator(int num_columns, std::vector<LpRow> rows, std::vector<char> integral);

  void add_rows(const std::vector<LpRow>& rows);

  /// Tightens lower/upper in place starting from the rows touching
  /// `seeds` (all rows when empty). Returns false on a proven conflict.
  bool propagate(std::vector<double>& lower, std::vector<double>& upper, std::span<const int> seeds = {}) const;

 private:
  bool tighten_row(int r, std::vector<double>& lower, std::vector<double>& upper, std::vector<int>& changed) const;

  int n_ = 0;
  std::vector<LpRow> rows_;
  std::vector<char> integral_;
  std::vector<std::vector<int>> col_rows_;
};

}  // namespace fleetopt::mip
