#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "fleetopt/mip/problem.hpp"

namespace fleetopt::mip {

/// Writes the problem in LP text format (objective, Subject To, Bounds,
/// General, Binary, End). The secondary objective is not representable and
/// is dropped.
std::string write_lp(const MipProblem& problem);

/// Parses the subset of LP text format produced by write_lp plus common
/// variations (keyword spellings, multi-line expressions, free bounds).
/// Throws FormatError on malformed input.
MipProblem read_lp(std::string_view text);

nlohmann::json solution_to_json(const Solution& solution, const MipProblem& problem);

}  // namespace fleetopt::mip
