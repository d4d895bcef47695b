#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "fleetopt/dsl/dsl.hpp"

namespace fleetopt::dsl {

namespace {

constexpr double kDropTolerance = 1e-12;

struct AtomInfo {
  std::vector<IndexSet> sets;
  bool decision = false;
};

const std::map<std::string, AtomInfo>& atoms() {
  static const std::map<std::string, AtomInfo> table = {
      {"x", {{IndexSet::I, IndexSet::J, IndexSet::K}, true}},
      {"u_hat", {{IndexSet::J, IndexSet::K}, true}},
      {"u", {{IndexSet::J, IndexSet::K}, true}},
      {"z", {{IndexSet::J, IndexSet::K}, false}},
      {"S", {{IndexSet::I, IndexSet::K}, false}},
      {"dist", {{IndexSet::I, IndexSet::J}, false}},
      {"w", {{IndexSet::I, IndexSet::J}, false}},
  };
  return table;
}

int set_size(const FleetInstance& inst, IndexSet s) {
  switch (s) {
    case IndexSet::I: return static_cast<int>(inst.num_supply());
    case IndexSet::J: return static_cast<int>(inst.num_demand());
    case IndexSet::K: return inst.soc_levels;
  }
  return 0;
}

// ---- safeguard -------------------------------------------------------------

struct Shape {
  int degree = 0;
  int x_degree = 0;
  int u_degree = 0;
  bool abs_var = false;  // contains abs over decision variables
};

class Checker {
 public:
  Checker(const FleetInstance& inst, Validation& out) : inst_(inst), out_(out) {}

  Shape visit(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Number: return {};
      case Expr::Kind::IndexValue: return {};
      case Expr::Kind::Atom: return atom(e);
      case Expr::Kind::Add:
      case Expr::Kind::Sub: {
        const Shape l = visit(*e.children[0]);
        const Shape r = visit(*e.children[1]);
        return {std::max(l.degree, r.degree), std::max(l.x_degree, r.x_degree), std::max(l.u_degree, r.u_degree),
                l.abs_var || r.abs_var};
      }
      case Expr::Kind::Neg: return visit(*e.children[0]);
      case Expr::Kind::Mul: {
        const Shape l = visit(*e.children[0]);
        const Shape r = visit(*e.children[1]);
        if ((l.abs_var && r.degree > 0) || (r.abs_var && l.degree > 0))
          report("abs term multiplied by a non-constant factor", e);
        const Shape s{l.degree + r.degree, l.x_degree + r.x_degree, l.u_degree + r.u_degree,
                      l.abs_var || r.abs_var};
        if (s.degree <= 2 && s.x_degree > 1) report("product of two allocation variables is not supported", e);
        if (s.degree <= 2 && s.u_degree > 1) report("product of two fare variables is not supported", e);
        return s;
      }
      case Expr::Kind::Abs: {
        const Shape inner = visit(*e.children[0]);
        if (inner.degree > 1 || inner.abs_var) report("abs argument must be affine", e);
        Shape s = inner;
        s.abs_var = inner.degree > 0 || inner.abs_var;
        return s;
      }
      case Expr::Kind::Sum:
      case Expr::Kind::Avg: return comprehension(e);
    }
    return {};
  }

  void report(const std::string& msg, const Expr& e) { out_.diagnostics.push_back({msg, e.line, e.column}); }

 private:
  const IndexSet* lookup(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }

  void check_ref(const IndexRef& ref, IndexSet expected, const std::string& where, const Expr& e) {
    if (ref.is_literal()) {
      if (ref.literal < 0 || ref.literal >= set_size(inst_, expected))
        report("index " + std::to_string(ref.literal) + " out of range for " + to_string(expected) + " in " + where,
               e);
      return;
    }
    const IndexSet* s = lookup(ref.name);
    if (!s) {
      report("unbound index variable '" + ref.name + "'", e);
    } else if (*s != expected) {
      report("index '" + ref.name + "' ranges over " + to_string(*s) + " but " + where + " expects " +
                 to_string(expected),
             e);
    }
  }

  Shape atom(const Expr& e) {
    const auto it = atoms().find(e.name);
    if (it == atoms().end()) {
      report("unknown identifier '" + e.name + "'", e);
      return {};
    }
    const AtomInfo& info = it->second;
    if (info.sets.size() != e.args.size()) {
      report(e.name + " expects " + std::to_string(info.sets.size()) + " indices", e);
      return {};
    }
    for (std::size_t a = 0; a < e.args.size(); ++a) check_ref(e.args[a], info.sets[a], e.name, e);
    if (!info.decision) return {};
    const bool is_x = e.name == "x";
    return {1, is_x ? 1 : 0, is_x ? 0 : 1, false};
  }

  Shape comprehension(const Expr& e) {
    std::set<std::string> seen;
    const std::size_t mark = scope_.size();
    for (const Binding& b : e.bindings) {
      if (!seen.insert(b.name).second) report("duplicate binding '" + b.name + "'", e);
      else if (lookup(b.name)) report("binding '" + b.name + "' shadows an enclosing binding", e);
      else if (atoms().contains(b.name)) report("binding '" + b.name + "' shadows an identifier", e);
      scope_.emplace_back(b.name, b.set);
    }
    for (const Comparison& c : e.filter) {
      const IndexSet* l = c.lhs.is_literal() ? nullptr : lookup(c.lhs.name);
      const IndexSet* r = c.rhs.is_literal() ? nullptr : lookup(c.rhs.name);
      if ((!c.lhs.is_literal() && !l) || (!c.rhs.is_literal() && !r)) {
        report("unbound index variable in filter", e);
      } else if (l && r && *l != *r) {
        report(std::string("comparison between indices of ") + to_string(*l) + " and " + to_string(*r), e);
      }
    }
    const Shape body = visit(*e.children[0]);
    scope_.resize(mark);
    return body;
  }

  const FleetInstance& inst_;
  Validation& out_;
  std::vector<std::pair<std::string, IndexSet>> scope_;
};

// ---- expansion -------------------------------------------------------------

using Env = std::vector<std::pair<std::string, int>>;

int env_value(const Env& env, const std::string& name) {
  for (auto it = env.rbegin(); it != env.rend(); ++it)
    if (it->first == name) return it->second;
  throw std::invalid_argument("unbound index variable '" + name + "'");
}

int ref_value(const Env& env, const IndexRef& r) { return r.is_literal() ? r.literal : env_value(env, r.name); }

bool holds(const Comparison& c, const Env& env) {
  const int l = ref_value(env, c.lhs), r = ref_value(env, c.rhs);
  switch (c.op) {
    case Comparison::Op::Less: return l < r;
    case Comparison::Op::LessEqual: return l <= r;
    case Comparison::Op::Greater: return l > r;
    case Comparison::Op::GreaterEqual: return l >= r;
    case Comparison::Op::Equal: return l == r;
    case Comparison::Op::NotEqual: return l != r;
  }
  return false;
}

// Calls fn for each binding tuple passing the filter; env is extended in place.
void for_each_tuple(const Expr& e, const FleetInstance& inst, Env& env, const std::function<void()>& fn) {
  const std::size_t mark = env.size();
  std::function<void(std::size_t)> rec = [&](std::size_t level) {
    if (level == e.bindings.size()) {
      for (const Comparison& c : e.filter)
        if (!holds(c, env)) return;
      fn();
      return;
    }
    const int n = set_size(inst, e.bindings[level].set);
    for (int v = 0; v < n; ++v) {
      env.emplace_back(e.bindings[level].name, v);
      rec(level + 1);
      env.pop_back();
    }
  };
  rec(0);
  env.resize(mark);
}

double parameter(const FleetInstance& inst, const std::string& name, const std::vector<int>& idx) {
  const auto a = static_cast<std::size_t>(idx[0]);
  const auto b = static_cast<std::size_t>(idx[1]);
  if (name == "S") return inst.supply(a, b);
  if (name == "z") return inst.demand(a, b);
  if (name == "dist") return inst.distance_km(a, b);
  if (name == "w") return inst.cost(a, b);
  throw std::invalid_argument("unknown parameter '" + name + "'");
}

std::vector<int> atom_indices(const Expr& e, const Env& env) {
  std::vector<int> idx;
  for (const IndexRef& r : e.args) idx.push_back(ref_value(env, r));
  return idx;
}

struct Expansion {
  Poly poly;
  std::vector<AbsTerm> abs;
};

void add_into(Poly& into, const Poly& from, double scale) {
  for (const auto& [mono, coef] : from) into[mono] += scale * coef;
}

Poly multiply(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) {
      std::vector<VarKey> m = ma;
      m.insert(m.end(), mb.begin(), mb.end());
      std::sort(m.begin(), m.end());
      out[m] += ca * cb;
    }
  }
  return out;
}

bool is_constant(const Expansion& x) {
  if (!x.abs.empty()) return false;
  return std::all_of(x.poly.begin(), x.poly.end(), [](const auto& kv) { return kv.first.empty(); });
}

double constant_of(const Poly& p) {
  const auto it = p.find({});
  return it == p.end() ? 0.0 : it->second;
}

void prune(Poly& p) {
  for (auto it = p.begin(); it != p.end();) {
    if (std::fabs(it->second) < kDropTolerance) it = p.erase(it);
    else ++it;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string poly_str(const Poly& p) {
  std::string s;
  for (const auto& [mono, coef] : p) {
    if (!s.empty()) s += ' ';
    s += (coef >= 0 ? "+" : "") + fmt(coef);
    for (const VarKey& k : mono) s += "*" + k.str();
  }
  return s.empty() ? "0" : s;
}

class Expander {
 public:
  explicit Expander(const FleetInstance& inst) : inst_(inst) {}

  Expansion visit(const Expr& e, Env& env) {
    switch (e.kind) {
      case Expr::Kind::Number: return constant(e.value);
      case Expr::Kind::IndexValue: return constant(env_value(env, e.name));
      case Expr::Kind::Atom: return atom(e, env);
      case Expr::Kind::Add:
      case Expr::Kind::Sub: {
        Expansion l = visit(*e.children[0], env);
        Expansion r = visit(*e.children[1], env);
        const double s = e.kind == Expr::Kind::Add ? 1.0 : -1.0;
        add_into(l.poly, r.poly, s);
        for (AbsTerm& t : r.abs) {
          t.coef *= s;
          l.abs.push_back(std::move(t));
        }
        return l;
      }
      case Expr::Kind::Neg: {
        Expansion x = visit(*e.children[0], env);
        scale(x, -1.0);
        return x;
      }
      case Expr::Kind::Mul: {
        Expansion l = visit(*e.children[0], env);
        Expansion r = visit(*e.children[1], env);
        if (is_constant(l)) {
          scale(r, constant_of(l.poly));
          return r;
        }
        if (is_constant(r)) {
          scale(l, constant_of(r.poly));
          return l;
        }
        if (!l.abs.empty() || !r.abs.empty()) throw std::invalid_argument("abs term multiplied by a non-constant");
        return {multiply(l.poly, r.poly), {}};
      }
      case Expr::Kind::Abs: {
        Expansion inner = visit(*e.children[0], env);
        if (!inner.abs.empty()) throw std::invalid_argument("abs argument must be affine");
        prune(inner.poly);
        if (is_constant(inner)) return constant(std::fabs(constant_of(inner.poly)));
        AbsTerm t;
        t.coef = 1.0;
        // abs(c * e) = |c| * abs(e): normalize so the leading variable term is +1.
        double lead = 0.0;
        for (const auto& [mono, coef] : inner.poly) {
          if (!mono.empty()) {
            lead = coef;
            break;
          }
        }
        for (auto& [mono, coef] : inner.poly) coef /= lead;
        t.coef = std::fabs(lead);
        prune(inner.poly);
        t.inner = std::move(inner.poly);
        t.key = poly_str(t.inner);
        return {{}, {std::move(t)}};
      }
      case Expr::Kind::Sum:
      case Expr::Kind::Avg: {
        Expansion acc;
        int count = 0;
        for_each_tuple(e, inst_, env, [&] {
          Expansion body = visit(*e.children[0], env);
          add_into(acc.poly, body.poly, 1.0);
          for (AbsTerm& t : body.abs) acc.abs.push_back(std::move(t));
          ++count;
        });
        if (e.kind == Expr::Kind::Avg) scale(acc, count > 0 ? 1.0 / count : 0.0);
        merge_abs(acc);
        return acc;
      }
    }
    return {};
  }

  static void merge_abs(Expansion& x) {
    std::map<std::string, AbsTerm> merged;
    for (AbsTerm& t : x.abs) {
      auto [it, inserted] = merged.try_emplace(t.key, t);
      if (!inserted) it->second.coef += t.coef;
    }
    x.abs.clear();
    for (auto& [key, t] : merged)
      if (std::fabs(t.coef) >= kDropTolerance) x.abs.push_back(std::move(t));
  }

 private:
  static Expansion constant(double v) {
    Expansion x;
    x.poly[{}] = v;
    return x;
  }

  static void scale(Expansion& x, double s) {
    for (auto& [mono, coef] : x.poly) coef *= s;
    for (AbsTerm& t : x.abs) t.coef *= s;
  }

  Expansion atom(const Expr& e, const Env& env) {
    const std::vector<int> idx = atom_indices(e, env);
    if (e.name == "x") {
      Expansion x;
      x.poly[{VarKey{VarKey::Kind::X, idx[0], idx[1], idx[2]}}] = 1.0;
      return x;
    }
    if (e.name == "u_hat") {
      Expansion x;
      x.poly[{VarKey{VarKey::Kind::UHat, idx[0], idx[1], 0}}] = 1.0;
      return x;
    }
    if (e.name == "u") {
      Expansion x;
      x.poly[{VarKey{VarKey::Kind::UHat, idx[0], idx[1], 0}}] = inst_.theta;
      x.poly[{}] = inst_.booking_fee[static_cast<std::size_t>(idx[0])];
      return x;
    }
    return constant(parameter(inst_, e.name, idx));
  }

  const FleetInstance& inst_;
};

class Evaluator {
 public:
  Evaluator(const FleetInstance& inst, const Decision& d) : inst_(inst), d_(d) {}

  double visit(const Expr& e, Env& env) {
    switch (e.kind) {
      case Expr::Kind::Number: return e.value;
      case Expr::Kind::IndexValue: return env_value(env, e.name);
      case Expr::Kind::Atom: {
        const std::vector<int> idx = atom_indices(e, env);
        if (e.name == "x")
          return d_.alloc(static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1]),
                          static_cast<std::size_t>(idx[2]));
        if (e.name == "u_hat") return d_.u_hat(static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1]));
        if (e.name == "u")
          return inst_.revenue_per_trip(static_cast<std::size_t>(idx[0]),
                                        d_.u_hat(static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1])));
        return parameter(inst_, e.name, idx);
      }
      case Expr::Kind::Add: return visit(*e.children[0], env) + visit(*e.children[1], env);
      case Expr::Kind::Sub: return visit(*e.children[0], env) - visit(*e.children[1], env);
      case Expr::Kind::Mul: return visit(*e.children[0], env) * visit(*e.children[1], env);
      case Expr::Kind::Neg: return -visit(*e.children[0], env);
      case Expr::Kind::Abs: return std::fabs(visit(*e.children[0], env));
      case Expr::Kind::Sum:
      case Expr::Kind::Avg: {
        double acc = 0.0;
        int count = 0;
        for_each_tuple(e, inst_, env, [&] {
          acc += visit(*e.children[0], env);
          ++count;
        });
        if (e.kind == Expr::Kind::Avg) return count > 0 ? acc / count : 0.0;
        return acc;
      }
    }
    return 0.0;
  }

 private:
  const FleetInstance& inst_;
  const Decision& d_;
};

double key_value(const VarKey& k, const Decision& d) {
  if (k.kind == VarKey::Kind::X)
    return d.alloc(static_cast<std::size_t>(k.a), static_cast<std::size_t>(k.b), static_cast<std::size_t>(k.c));
  return d.u_hat(static_cast<std::size_t>(k.a), static_cast<std::size_t>(k.b));
}

double poly_value(const Poly& p, const Decision& d) {
  double total = 0.0;
  for (const auto& [mono, coef] : p) {
    double term = coef;
    for (const VarKey& k : mono) term *= key_value(k, d);
    total += term;
  }
  return total;
}

void require_accepted(const ObjectiveAst& ast, const FleetInstance& inst) {
  if (!ast.body) throw std::invalid_argument("empty objective");
  const Validation v = safeguard(ast, inst);
  if (!v.accepted) throw std::invalid_argument("objective rejected: " + v.report());
}

}  // namespace

std::string VarKey::str() const {
  if (kind == Kind::X) return "x[" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + "]";
  return "u_hat[" + std::to_string(a) + "," + std::to_string(b) + "]";
}

std::string Validation::report() const {
  if (diagnostics.empty()) return accepted ? "ok" : "rejected";
  std::string s;
  for (const Diagnostic& d : diagnostics) {
    if (!s.empty()) s += "; ";
    s += std::to_string(d.line) + ":" + std::to_string(d.column) + ": " + d.message;
  }
  return s;
}

Validation safeguard(const ObjectiveAst& ast, const FleetInstance& instance) {
  Validation out;
  if (!ast.body) {
    out.diagnostics.push_back({"empty objective", 1, 1});
    return out;
  }
  Checker checker(instance, out);
  const Shape s = checker.visit(*ast.body);
  out.degree = s.degree;
  if (s.degree > 2) checker.report("degree " + std::to_string(s.degree) + " exceeds 2", *ast.body);
  out.linear = s.degree <= 1 && !s.abs_var;
  out.accepted = out.diagnostics.empty();
  return out;
}

std::string CanonicalForm::str() const {
  std::string s = sense == Sense::Maximize ? "max " : "min ";
  s += poly_str(poly);
  for (const AbsTerm& t : abs_terms) s += " " + std::string(t.coef >= 0 ? "+" : "") + fmt(t.coef) + "*abs(" + t.key + ")";
  return s;
}

namespace {

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return v < 0 ? "(" + std::string(buf) + ")" : buf;
}

std::string poly_source(const Poly& p) {
  std::string s;
  for (const auto& [mono, coef] : p) {
    if (!s.empty()) s += " + ";
    s += exact(coef);
    for (const VarKey& k : mono) s += " * " + k.str();
  }
  return s.empty() ? "0" : s;
}

}  // namespace

std::string to_source(const CanonicalForm& form) {
  std::string s = form.sense == Sense::Maximize ? "maximize " : "minimize ";
  s += poly_source(form.poly);
  for (const AbsTerm& t : form.abs_terms) s += " + " + exact(t.coef) + " * abs(" + poly_source(t.inner) + ")";
  return s;
}

CanonicalForm canonicalize(const ObjectiveAst& ast, const FleetInstance& instance) {
  if (instance.num_supply() == 0 || instance.num_demand() == 0 || instance.soc_levels <= 0)
    throw std::invalid_argument("index sets empty");
  require_accepted(ast, instance);
  Env env;
  Expansion x = Expander(instance).visit(*ast.body, env);
  Expander::merge_abs(x);
  prune(x.poly);
  CanonicalForm form;
  form.sense = ast.sense;
  form.poly = std::move(x.poly);
  form.abs_terms = std::move(x.abs);
  return form;
}

double evaluate(const ObjectiveAst& ast, const FleetInstance& instance, const Decision& decision,
                const FulfillmentState& /*fulfillment*/) {
  return evaluate(ast, instance, decision);
}

double evaluate(const ObjectiveAst& ast, const FleetInstance& instance, const Decision& decision) {
  require_accepted(ast, instance);
  if (decision.num_supply != instance.num_supply() || decision.num_demand != instance.num_demand() ||
      decision.num_soc != instance.num_soc())
    throw std::invalid_argument("decision dimensions do not match the instance");
  Env env;
  return Evaluator(instance, decision).visit(*ast.body, env);
}

double evaluate(const CanonicalForm& form, const Decision& decision) {
  double total = poly_value(form.poly, decision);
  for (const AbsTerm& t : form.abs_terms) total += t.coef * std::fabs(poly_value(t.inner, decision));
  return total;
}

}  // namespace fleetopt::dsl
