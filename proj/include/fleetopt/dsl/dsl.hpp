#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fleetopt/dsl/ast.hpp"
#include "fleetopt/fleet_model.hpp"
#include "fleetopt/mip/problem.hpp"

namespace fleetopt::dsl {

/// Grammar (whitespace-insensitive, keywords lowercase):
///
///   objective := ("maximize" | "minimize") expr
///   expr      := term (("+" | "-") term)*
///   term      := unary ("*" unary)*
///   unary     := "-" unary | primary
///   primary   := number | "(" expr ")" | "abs" "(" expr ")"
///              | ("sum" | "avg") "(" binding ("," binding)* ["if" cond ("and" cond)*] ")" term
///              | name | name "[" index ("," index)* "]"
///   binding   := name "in" ("I" | "J" | "K")
///   cond      := index ("<" | "<=" | ">" | ">=" | "==" | "!=") index
///   index     := name | integer
///
/// Atoms: x[i,j,k], u_hat[j,k], u[j,k] (= theta*u_hat + b), S[i,k], z[j,k],
/// dist[i,j], w[i,j]. A bare bound index name evaluates to its position.
ObjectiveAst parse(std::string_view source);

struct Diagnostic {
  std::string message;
  int line = 0;
  int column = 0;
};

struct Validation {
  bool accepted = false;
  bool linear = false;
  int degree = 0;
  std::vector<Diagnostic> diagnostics;

  std::string report() const;
};

/// Checks identifiers, index types and ranges, degree <= 2, abs over affine
/// arguments scaled only by constants, and classifies linearity.
Validation safeguard(const ObjectiveAst& ast, const FleetInstance& instance);

/// Key of a decision variable: x[i,j,k] or u_hat[j,k].
struct VarKey {
  enum class Kind { X, UHat };
  Kind kind = Kind::X;
  int a = 0, b = 0, c = 0;  // (i,j,k) for X, (j,k,0) for UHat
  auto operator<=>(const VarKey&) const = default;
  std::string str() const;
};

/// Polynomial of degree <= 2: monomial (sorted variable list) -> coefficient.
using Poly = std::map<std::vector<VarKey>, double>;

struct AbsTerm {
  double coef = 0.0;
  Poly inner;       // affine
  std::string key;  // canonical rendering of inner
};

struct CanonicalForm {
  Sense sense = Sense::Maximize;
  Poly poly;                    // includes the constant under the empty key
  std::vector<AbsTerm> abs_terms;  // sorted by key, merged

  std::string str() const;
  bool operator==(const CanonicalForm& other) const { return str() == other.str(); }
};

/// Expands every comprehension over the instance index sets and merges
/// monomials. Throws std::invalid_argument if validation fails or an index
/// set is empty.
CanonicalForm canonicalize(const ObjectiveAst& ast, const FleetInstance& instance);

/// DSL text with one explicit term per monomial (literal indices).
std::string to_source(const CanonicalForm& form);

/// Direct evaluation of the objective at a decision. `fulfillment` is
/// accepted for interface symmetry; no atom depends on it today.
double evaluate(const ObjectiveAst& ast, const FleetInstance& instance, const Decision& decision,
                const FulfillmentState& fulfillment);
double evaluate(const ObjectiveAst& ast, const FleetInstance& instance, const Decision& decision);

/// Value of a canonical form at a decision (dot product over monomials).
double evaluate(const CanonicalForm& form, const Decision& decision);

/// Mapping of decision variables into a MipProblem. Fares are either
/// explicit variables (u_hat[c] >= 0) or grid selections (price_choice[c]
/// lists (binary var, fare) pairs). Index c = j * K + k.
struct DecisionVars {
  std::vector<int> x;
  std::vector<int> u_hat;
  std::vector<std::vector<std::pair<int, double>>> price_choice;
};

struct LowerOptions {
  int grid_points = 8;  // grid for fares appearing in products
};

struct LoweringStats {
  int aux_variables = 0;
  int aux_constraints = 0;
  int product_auxiliaries = 0;
  int abs_auxiliaries = 0;
  int grid_binaries = 0;
};

struct Lowered {
  mip::Objective objective;
  LoweringStats stats;
};

/// Adds the rows and auxiliaries needed to express the objective linearly
/// and returns it. Fare x allocation products are linearized against price
/// grid binaries (created on demand when fares are explicit variables);
/// abs terms get one auxiliary and two rows when the sense makes them
/// convex, plus a binary otherwise. Throws std::invalid_argument for terms
/// that cannot be represented (products of two allocations or two fares).
Lowered lower_to_mip(const ObjectiveAst& ast, const FleetInstance& instance, mip::MipProblem& problem,
                     DecisionVars& vars, const LowerOptions& options = {});

double jaro_winkler(std::string_view a, std::string_view b);
double jaro(std::string_view a, std::string_view b);

/// Collapses whitespace runs to one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

double text_similarity(std::string_view generated, std::string_view truth);
double result_similarity(const ObjectiveAst& generated, const ObjectiveAst& truth, const FleetInstance& instance);
bool equivalent(const ObjectiveAst& a, const ObjectiveAst& b, const FleetInstance& instance);

struct CatalogEntry {
  std::string query;
  std::string source;
  bool linear = true;
  std::vector<std::string> paraphrases;  // reworded queries for out-of-sample tests
};

const std::vector<CatalogEntry>& builtin_catalog();
nlohmann::json catalog_to_json(const std::vector<CatalogEntry>& catalog);
std::vector<CatalogEntry> catalog_from_json(const nlohmann::json& doc);

}  // namespace fleetopt::dsl
