#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fleetopt/mip/problem.hpp"

namespace fleetopt::dsl {

using mip::Sense;

/// Raised by parse() with a 1-based source position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

enum class IndexSet { I, J, K };

const char* to_string(IndexSet set);

struct Binding {
  std::string name;
  IndexSet set = IndexSet::I;
};

/// An index position: either a bound index variable or an integer literal.
struct IndexRef {
  std::string name;  // empty for literals
  int literal = 0;
  bool is_literal() const { return name.empty(); }
};

struct Comparison {
  enum class Op { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };
  IndexRef lhs;
  Op op = Op::Equal;
  IndexRef rhs;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind {
    Number,      // value
    IndexValue,  // name: numeric value of a bound index
    Atom,        // name[args]
    Add,
    Sub,
    Mul,
    Neg,
    Abs,
    Sum,         // bindings, filter, children[0] body
    Avg,
  };
  Kind kind = Kind::Number;
  double value = 0.0;
  std::string name;
  std::vector<IndexRef> args;
  std::vector<Binding> bindings;
  std::vector<Comparison> filter;  // conjunction
  std::vector<ExprPtr> children;
  int line = 1;
  int column = 1;
};

struct ObjectiveAst {
  Sense sense = Sense::Maximize;
  ExprPtr body;
  std::string source;
};

/// Re-serializes an AST into DSL text that parses back to the same tree.
std::string to_source(const ObjectiveAst& ast);

}  // namespace fleetopt::dsl
