#include "fleetopt/mip/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fleetopt/common.hpp"

namespace fleetopt::mip {

namespace {

std::string number(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_terms(std::ostringstream& os, const MipProblem& p, const std::vector<Term>& terms) {
  bool first = true;
  for (const Term& t : terms) {
    if (t.coef == 0.0) continue;
    const double a = std::fabs(t.coef);
    os << (t.coef < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    if (a != 1.0) os << number(a) << ' ';
    os << p.variable(t.var).name;
    first = false;
  }
  if (first) os << "0";
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

enum class Section { None, Objective, Constraints, Bounds, General, Binary, End };

struct Token {
  enum Kind { Number, Name, Op, Colon } kind;
  std::string text;
  double value = 0.0;
};

bool name_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '<' && c != '>' && c != '=' &&
         c != ':';
}

std::vector<Token> tokenize(std::string_view line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      ++i;
      if (i < line.size() && line[i] == '=') {
        if (c != '=') op += '=';
        ++i;
      } else if (c == '=' && i < line.size() && (line[i] == '<' || line[i] == '>')) {
        op = std::string(1, line[i]) + "=";
        ++i;
      }
      if (op == "<") op = "<=";
      if (op == ">") op = ">=";
      out.push_back(Token{Token::Op, op});
    } else if (c == '+' || c == '-') {
      out.push_back(Token{Token::Op, std::string(1, c)});
      ++i;
    } else if (c == ':') {
      out.push_back(Token{Token::Colon, ":"});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.' || line[j] == 'e' ||
                                 line[j] == 'E' ||
                                 ((line[j] == '+' || line[j] == '-') && j > i && (line[j - 1] == 'e' || line[j - 1] == 'E'))))
        ++j;
      const std::string text(line.substr(i, j - i));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size())
        throw FormatError("LP line " + std::to_string(lineno) + ": bad number '" + text + "'");
      out.push_back(Token{Token::Number, text, v});
      i = j;
    } else {
      std::size_t j = i;
      while (j < line.size() && name_char(line[j])) ++j;
      std::string text(line.substr(i, j - i));
      const std::string low = lower(text);
      if (low == "inf" || low == "infinity") out.push_back(Token{Token::Number, text, kInf});
      else out.push_back(Token{Token::Name, text});
      i = j;
    }
  }
  return out;
}

class Reader {
 public:
  MipProblem run(std::string_view text);

 private:
  int var(const std::string& name) {
    if (auto idx = problem_.find(name)) return *idx;
    return problem_.add_variable(name, VarKind::Continuous, 0.0, kInf);
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("LP statement ending at line " + std::to_string(line_) + ": " + what);
  }
  // Parses a linear expression starting at pos; stops at a relation operator.
  std::vector<Term> expression(const std::vector<Token>& t, std::size_t& pos, double& constant);
  void objective(const std::vector<Token>& t);
  void constraint(const std::vector<Token>& t);
  void bound(const std::vector<Token>& t);

  MipProblem problem_;
  Sense sense_ = Sense::Minimize;
  int line_ = 0;
  int unnamed_ = 0;
};

std::vector<Term> Reader::expression(const std::vector<Token>& t, std::size_t& pos, double& constant) {
  std::vector<Term> terms;
  while (pos < t.size()) {
    if (t[pos].kind == Token::Op && (t[pos].text == "<=" || t[pos].text == ">=" || t[pos].text == "=")) break;
    double sign = 1.0;
    bool any = false;
    while (pos < t.size() && t[pos].kind == Token::Op && (t[pos].text == "+" || t[pos].text == "-")) {
      if (t[pos].text == "-") sign = -sign;
      ++pos;
      any = true;
    }
    double coef = 1.0;
    bool has_coef = false;
    if (pos < t.size() && t[pos].kind == Token::Number) {
      coef = t[pos].value;
      has_coef = true;
      ++pos;
    }
    if (pos < t.size() && t[pos].kind == Token::Name) {
      terms.push_back(Term{var(t[pos].text), sign * coef});
      ++pos;
    } else if (has_coef) {
      constant += sign * coef;
    } else if (any || pos < t.size()) {
      fail("expected a term");
    }
  }
  return terms;
}

void Reader::objective(const std::vector<Token>& t) {
  std::size_t pos = 0;
  if (t.size() >= 2 && t[0].kind == Token::Name && t[1].kind == Token::Colon) pos = 2;
  Objective obj;
  obj.sense = sense_;
  obj.terms = expression(t, pos, obj.constant);
  if (pos != t.size()) fail("relation in objective");
  problem_.set_objective(std::move(obj));
}

void Reader::constraint(const std::vector<Token>& t) {
  std::size_t pos = 0;
  std::string name;
  if (t.size() >= 2 && t[0].kind == Token::Name && t[1].kind == Token::Colon) {
    name = t[0].text;
    pos = 2;
  } else {
    name = "R" + std::to_string(++unnamed_);
  }
  double constant = 0.0;
  auto terms = expression(t, pos, constant);
  if (pos >= t.size()) fail("constraint without relation");
  const std::string op = t[pos++].text;
  double rhs_sign = 1.0;
  while (pos < t.size() && t[pos].kind == Token::Op && (t[pos].text == "-" || t[pos].text == "+")) {
    if (t[pos].text == "-") rhs_sign = -rhs_sign;
    ++pos;
  }
  if (pos + 1 != t.size() || t[pos].kind != Token::Number) fail("constraint rhs must be a number");
  const double rhs = rhs_sign * t[pos].value - constant;
  const Relation rel = op == "<=" ? Relation::LessEqual : op == ">=" ? Relation::GreaterEqual : Relation::Equal;
  problem_.add_constraint(name, std::move(terms), rel, rhs);
}

void Reader::bound(const std::vector<Token>& t) {
  // Forms: x free | x op v | v op x | v op x op v  (signed numbers allowed)
  std::vector<Token> toks;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].kind == Token::Op && (t[i].text == "-" || t[i].text == "+") && i + 1 < t.size() &&
        t[i + 1].kind == Token::Number) {
      Token n = t[i + 1];
      if (t[i].text == "-") n.value = -n.value;
      toks.push_back(n);
      ++i;
    } else {
      toks.push_back(t[i]);
    }
  }
  auto set = [&](int v, const std::string& op, double value, bool var_on_left) {
    const Variable& cur = problem_.variable(v);
    double lo = cur.lower, hi = cur.upper;
    std::string o = op;
    if (!var_on_left) o = op == "<=" ? ">=" : op == ">=" ? "<=" : op;
    if (o == "<=") hi = value;
    else if (o == ">=") lo = value;
    else lo = hi = value;
    if (lo > hi) fail("bound lower exceeds upper for " + cur.name);
    problem_.set_bounds(v, lo, hi);
  };
  if (toks.size() == 2 && toks[0].kind == Token::Name && lower(toks[1].text) == "free") {
    problem_.set_bounds(var(toks[0].text), -kInf, kInf);
  } else if (toks.size() == 3 && toks[0].kind == Token::Name && toks[1].kind == Token::Op && toks[2].kind == Token::Number) {
    set(var(toks[0].text), toks[1].text, toks[2].value, true);
  } else if (toks.size() == 3 && toks[0].kind == Token::Number && toks[1].kind == Token::Op && toks[2].kind == Token::Name) {
    set(var(toks[2].text), toks[1].text, toks[0].value, false);
  } else if (toks.size() == 5 && toks[0].kind == Token::Number && toks[2].kind == Token::Name && toks[4].kind == Token::Number) {
    const int v = var(toks[2].text);
    set(v, toks[1].text, toks[0].value, false);
    set(v, toks[3].text, toks[4].value, true);
  } else {
    fail("unrecognized bound");
  }
}

MipProblem Reader::run(std::string_view text) {
  Section section = Section::None;
  std::vector<Token> pending;
  auto flush = [&]() {
    if (pending.empty()) return;
    if (section == Section::Objective) objective(pending);
    else if (section == Section::Constraints) constraint(pending);
    pending.clear();
  };
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_;
    const auto cut = raw.find('\\');
    std::string line = cut == std::string::npos ? raw : raw.substr(0, cut);
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
    trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
    const std::string key = lower(trimmed);
    if (trimmed.empty()) continue;
    Section next = Section::None;
    if (key == "maximize" || key == "maximise" || key == "max") {
      sense_ = Sense::Maximize;
      next = Section::Objective;
    } else if (key == "minimize" || key == "minimise" || key == "min") {
      sense_ = Sense::Minimize;
      next = Section::Objective;
    } else if (key == "subject to" || key == "such that" || key == "st" || key == "s.t.") {
      next = Section::Constraints;
    } else if (key == "bounds" || key == "bound") {
      next = Section::Bounds;
    } else if (key == "general" || key == "generals" || key == "gen" || key == "integer" || key == "integers") {
      next = Section::General;
    } else if (key == "binary" || key == "binaries" || key == "bin") {
      next = Section::Binary;
    } else if (key == "end") {
      next = Section::End;
    }
    if (next != Section::None) {
      flush();
      section = next;
      if (section == Section::End) break;
      continue;
    }
    const auto tokens = tokenize(trimmed, line_);
    switch (section) {
      case Section::Objective:
        pending.insert(pending.end(), tokens.begin(), tokens.end());
        break;
      case Section::Constraints: {
        // A new statement starts when the line opens with "name:" and the
        // pending statement already has a relation.
        bool starts_new = tokens.size() >= 2 && tokens[0].kind == Token::Name && tokens[1].kind == Token::Colon;
        bool pending_complete = std::any_of(pending.begin(), pending.end(), [](const Token& tk) {
          return tk.kind == Token::Op && (tk.text == "<=" || tk.text == ">=" || tk.text == "=");
        });
        if (starts_new || (pending_complete && !pending.empty() && pending.back().kind == Token::Number)) flush();
        pending.insert(pending.end(), tokens.begin(), tokens.end());
        break;
      }
      case Section::Bounds:
        bound(tokens);
        break;
      case Section::General:
      case Section::Binary:
        for (const Token& tk : tokens) {
          if (tk.kind != Token::Name) fail("expected variable names");
          problem_.set_kind(var(tk.text), section == Section::Binary ? VarKind::Binary : VarKind::Integer);
        }
        break;
      default:
        fail("content outside any section");
    }
  }
  flush();
  if (section != Section::End) throw FormatError("LP text missing End");
  return std::move(problem_);
}

}  // namespace

std::string write_lp(const MipProblem& problem) {
  std::ostringstream os;
  const Objective& obj = problem.objective();
  os << (obj.sense == Sense::Maximize ? "Maximize" : "Minimize") << "\n obj: ";
  write_terms(os, problem, obj.terms);
  if (obj.constant != 0.0) os << (obj.constant < 0 ? " - " : " + ") << number(std::fabs(obj.constant));
  os << "\nSubject To\n";
  for (const Constraint& c : problem.constraints()) {
    os << ' ' << c.name << ": ";
    write_terms(os, problem, c.terms);
    os << (c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::GreaterEqual ? " >= " : " = ")
       << number(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const Variable& v : problem.variables()) {
    if (v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0) continue;
    if (v.lower == -kInf && v.upper == kInf) {
      os << ' ' << v.name << " free\n";
    } else if (v.lower == v.upper) {
      os << ' ' << v.name << " = " << number(v.lower) << '\n';
    } else {
      os << ' ' << number(v.lower) << " <= " << v.name << " <= " << number(v.upper) << '\n';
    }
  }
  bool header = false;
  for (const Variable& v : problem.variables()) {
    if (v.kind != VarKind::Integer) continue;
    if (!header) os << "General\n";
    header = true;
    os << ' ' << v.name << '\n';
  }
  header = false;
  for (const Variable& v : problem.variables()) {
    if (v.kind != VarKind::Binary) continue;
    if (!header) os << "Binary\n";
    header = true;
    os << ' ' << v.name << '\n';
  }
  os << "End\n";
  return os.str();
}

MipProblem read_lp(std::string_view text) {
  Reader reader;
  return reader.run(text);
}

nlohmann::json solution_to_json(const Solution& s, const MipProblem& problem) {
  nlohmann::json j;
  j["status"] = to_string(s.status);
  j["objective"] = s.objective;
  if (s.secondary_objective) j["secondary_objective"] = *s.secondary_objective;
  if (s.primary_optimum) j["primary_optimum"] = *s.primary_optimum;
  j["best_bound"] = s.best_bound;
  j["nodes"] = s.nodes;
  j["lp_iterations"] = s.lp_iterations;
  j["cuts"] = {{"gomory", s.gomory_cuts}, {"cover", s.cover_cuts}};
  j["wall_seconds"] = s.wall_seconds;
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t i = 0; i < s.values.size(); ++i) values[problem.variable(static_cast<int>(i)).name] = s.values[i];
  j["values"] = std::move(values);
  return j;
}

}  // namespace fleetopt::mip
