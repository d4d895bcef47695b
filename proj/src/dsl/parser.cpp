#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>

#include "fleetopt/dsl/dsl.hpp"

namespace fleetopt::dsl {

const char* to_string(IndexSet set) {
  switch (set) {
    case IndexSet::I: return "I";
    case IndexSet::J: return "J";
    case IndexSet::K: return "K";
  }
  return "?";
}

namespace {

enum class Tok { Ident, Number, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t p = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t q = 0; q < n; ++q) {
      if (src[p] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++p;
    }
  };
  while (p < src.size()) {
    const char c = src[p];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (p < src.size() && src[p] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t q = p;
      while (q < src.size() && (std::isalnum(static_cast<unsigned char>(src[q])) || src[q] == '_')) ++q;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(p, q - p));
      advance(q - p);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && p + 1 < src.size() &&
                                                               std::isdigit(static_cast<unsigned char>(src[p + 1])))) {
      std::size_t q = p;
      while (q < src.size() && (std::isdigit(static_cast<unsigned char>(src[q])) || src[q] == '.')) ++q;
      if (q < src.size() && (src[q] == 'e' || src[q] == 'E')) {
        std::size_t r = q + 1;
        if (r < src.size() && (src[r] == '+' || src[r] == '-')) ++r;
        if (r < src.size() && std::isdigit(static_cast<unsigned char>(src[r]))) {
          q = r;
          while (q < src.size() && std::isdigit(static_cast<unsigned char>(src[q]))) ++q;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(p, q - p));
      const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
        throw ParseError("malformed number '" + t.text + "'", line, col);
      advance(q - p);
    } else {
      static const char* two[] = {"<=", ">=", "==", "!="};
      t.kind = Tok::Symbol;
      bool matched = false;
      for (const char* s : two) {
        if (src.substr(p, 2) == s) {
          t.text = s;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("+-*()[],<>").find(c) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

const std::map<std::string, std::vector<IndexSet>>& atom_signatures() {
  static const std::map<std::string, std::vector<IndexSet>> sigs = {
      {"x", {IndexSet::I, IndexSet::J, IndexSet::K}},
      {"u_hat", {IndexSet::J, IndexSet::K}},
      {"u", {IndexSet::J, IndexSet::K}},
      {"z", {IndexSet::J, IndexSet::K}},
      {"S", {IndexSet::I, IndexSet::K}},
      {"dist", {IndexSet::I, IndexSet::J}},
      {"w", {IndexSet::I, IndexSet::J}},
  };
  return sigs;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {"maximize", "minimize", "sum", "avg", "abs", "in", "if", "and"};
  return kw;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  ObjectiveAst run() {
    ObjectiveAst ast;
    const Token& head = peek();
    if (head.kind == Tok::Ident && head.text == "maximize") {
      ast.sense = Sense::Maximize;
    } else if (head.kind == Tok::Ident && head.text == "minimize") {
      ast.sense = Sense::Minimize;
    } else {
      fail("expected 'maximize' or 'minimize'", head);
    }
    next();
    ast.body = expr();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "' after expression", peek());
    return ast;
  }

 private:
  [[noreturn]] static void fail(const std::string& msg, const Token& t) { throw ParseError(msg, t.line, t.column); }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_symbol(const char* s) const { return peek().kind == Tok::Symbol && peek().text == s; }
  bool is_word(const char* s) const { return peek().kind == Tok::Ident && peek().text == s; }
  void expect_symbol(const char* s) {
    if (!is_symbol(s)) fail(std::string("expected '") + s + "'", peek());
    next();
  }

  static std::shared_ptr<Expr> node(Expr::Kind kind, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  ExprPtr binary(Expr::Kind kind, const Token& at, ExprPtr l, ExprPtr r) {
    auto e = node(kind, at);
    e->children = {std::move(l), std::move(r)};
    return e;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (is_symbol("+") || is_symbol("-")) {
      const Token op = next();
      ExprPtr rhs = term();
      lhs = binary(op.text == "+" ? Expr::Kind::Add : Expr::Kind::Sub, op, lhs, rhs);
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    while (is_symbol("*")) {
      const Token op = next();
      ExprPtr rhs = unary();
      lhs = binary(Expr::Kind::Mul, op, lhs, rhs);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (is_symbol("-")) {
      const Token op = next();
      auto e = node(Expr::Kind::Neg, op);
      e->children = {unary()};
      return e;
    }
    return primary();
  }

  IndexRef index_ref() {
    const Token& t = peek();
    IndexRef ref;
    if (t.kind == Tok::Number) {
      if (t.text.find_first_of(".eE") != std::string::npos || t.number > 1e9)
        fail("index literal must be a non-negative integer", t);
      ref.literal = static_cast<int>(t.number);
    } else if (t.kind == Tok::Ident && !keywords().contains(t.text)) {
      if (!bound_.contains(t.text)) fail("unbound index variable '" + t.text + "'", t);
      ref.name = t.text;
    } else {
      fail("expected an index variable or integer", t);
    }
    next();
    return ref;
  }

  ExprPtr comprehension(Expr::Kind kind, const Token& at) {
    expect_symbol("(");
    auto e = node(kind, at);
    std::vector<std::string> introduced;
    for (;;) {
      const Token& name = peek();
      if (name.kind != Tok::Ident || keywords().contains(name.text)) fail("expected an index variable name", name);
      Binding b;
      b.name = name.text;
      next();
      if (!is_word("in")) fail("expected 'in'", peek());
      next();
      const Token& set = peek();
      if (set.kind != Tok::Ident || (set.text != "I" && set.text != "J" && set.text != "K"))
        fail("expected index set I, J or K", set);
      b.set = set.text == "I" ? IndexSet::I : set.text == "J" ? IndexSet::J : IndexSet::K;
      next();
      e->bindings.push_back(b);
      ++bound_[b.name];
      introduced.push_back(b.name);
      if (!is_symbol(",")) break;
      next();
    }
    if (is_word("if")) {
      next();
      for (;;) {
        Comparison c;
        c.lhs = index_ref();
        const Token& op = peek();
        static const std::map<std::string, Comparison::Op> ops = {
            {"<", Comparison::Op::Less},         {"<=", Comparison::Op::LessEqual},
            {">", Comparison::Op::Greater},      {">=", Comparison::Op::GreaterEqual},
            {"==", Comparison::Op::Equal},       {"!=", Comparison::Op::NotEqual}};
        if (op.kind != Tok::Symbol || !ops.contains(op.text)) fail("expected a comparison operator", op);
        c.op = ops.at(op.text);
        next();
        c.rhs = index_ref();
        e->filter.push_back(c);
        if (!is_word("and")) break;
        next();
      }
    }
    expect_symbol(")");
    e->children = {term()};
    for (const auto& n : introduced)
      if (--bound_[n] == 0) bound_.erase(n);
    return e;
  }

  ExprPtr primary() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      next();
      auto e = node(Expr::Kind::Number, t);
      e->value = t.number;
      return e;
    }
    if (is_symbol("(")) {
      next();
      ExprPtr inner = expr();
      expect_symbol(")");
      return inner;
    }
    if (t.kind != Tok::Ident) fail(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'", t);
    if (t.text == "abs") {
      next();
      expect_symbol("(");
      auto e = node(Expr::Kind::Abs, t);
      e->children = {expr()};
      expect_symbol(")");
      return e;
    }
    if (t.text == "sum" || t.text == "avg") {
      next();
      return comprehension(t.text == "sum" ? Expr::Kind::Sum : Expr::Kind::Avg, t);
    }
    if (keywords().contains(t.text)) fail("unexpected keyword '" + t.text + "'", t);
    next();
    if (is_symbol("[")) {
      next();
      auto e = node(Expr::Kind::Atom, t);
      e->name = t.text;
      for (;;) {
        e->args.push_back(index_ref());
        if (!is_symbol(",")) break;
        next();
      }
      expect_symbol("]");
      const auto& sigs = atom_signatures();
      if (auto it = sigs.find(t.text); it != sigs.end() && it->second.size() != e->args.size())
        fail(t.text + " expects " + std::to_string(it->second.size()) + " indices, got " +
                 std::to_string(e->args.size()),
             t);
      return e;
    }
    if (bound_.contains(t.text)) {
      auto e = node(Expr::Kind::IndexValue, t);
      e->name = t.text;
      return e;
    }
    if (auto it = atom_signatures().find(t.text); it != atom_signatures().end())
      fail(t.text + " expects " + std::to_string(it->second.size()) + " indices, got 0", t);
    // Unknown bare identifiers are left for the safeguard to report.
    auto e = node(Expr::Kind::Atom, t);
    e->name = t.text;
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, int> bound_;
};

std::string fmt_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string ref_str(const IndexRef& r) { return r.is_literal() ? std::to_string(r.literal) : r.name; }

const char* op_str(Comparison::Op op) {
  switch (op) {
    case Comparison::Op::Less: return "<";
    case Comparison::Op::LessEqual: return "<=";
    case Comparison::Op::Greater: return ">";
    case Comparison::Op::GreaterEqual: return ">=";
    case Comparison::Op::Equal: return "==";
    case Comparison::Op::NotEqual: return "!=";
  }
  return "?";
}

// Fully parenthesized so that precedence never needs to be reconstructed.
std::string render(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: return e.value < 0 ? "(" + fmt_number(e.value) + ")" : fmt_number(e.value);
    case Expr::Kind::IndexValue: return e.name;
    case Expr::Kind::Atom: {
      if (e.args.empty()) return e.name;
      std::string s = e.name + "[";
      for (std::size_t a = 0; a < e.args.size(); ++a) s += (a ? "," : "") + ref_str(e.args[a]);
      return s + "]";
    }
    case Expr::Kind::Add: return "(" + render(*e.children[0]) + " + " + render(*e.children[1]) + ")";
    case Expr::Kind::Sub: return "(" + render(*e.children[0]) + " - " + render(*e.children[1]) + ")";
    case Expr::Kind::Mul: return "(" + render(*e.children[0]) + " * " + render(*e.children[1]) + ")";
    case Expr::Kind::Neg: return "(-" + render(*e.children[0]) + ")";
    case Expr::Kind::Abs: return "abs(" + render(*e.children[0]) + ")";
    case Expr::Kind::Sum:
    case Expr::Kind::Avg: {
      std::string s = e.kind == Expr::Kind::Sum ? "sum(" : "avg(";
      for (std::size_t b = 0; b < e.bindings.size(); ++b)
        s += (b ? ", " : "") + e.bindings[b].name + " in " + to_string(e.bindings[b].set);
      for (std::size_t c = 0; c < e.filter.size(); ++c)
        s += (c ? " and " : " if ") + ref_str(e.filter[c].lhs) + " " + op_str(e.filter[c].op) + " " +
             ref_str(e.filter[c].rhs);
      const Expr& body = *e.children[0];
      const bool wrapped = body.kind == Expr::Kind::Add || body.kind == Expr::Kind::Sub ||
                           body.kind == Expr::Kind::Mul || body.kind == Expr::Kind::Neg;
      return s + ") " + (wrapped ? render(body) : "(" + render(body) + ")");
    }
  }
  return "";
}

}  // namespace

ObjectiveAst parse(std::string_view source) {
  Parser parser(source);
  ObjectiveAst ast = parser.run();
  ast.source = std::string(source);
  return ast;
}

std::string to_source(const ObjectiveAst& ast) {
  return std::string(ast.sense == Sense::Maximize ? "maximize " : "minimize ") + render(*ast.body);
}

}  // namespace fleetopt::dsl
