#include <cmath>
#include <map>
#include <stdexcept>

#include "fleetopt/dsl/dsl.hpp"

namespace fleetopt::dsl {

namespace {

using mip::Relation;
using mip::Term;
using mip::VarKind;

struct Affine {
  std::vector<Term> terms;
  double constant = 0.0;
};

class Lowerer {
 public:
  Lowerer(const FleetInstance& inst, mip::MipProblem& p, DecisionVars& vars, const LowerOptions& opt)
      : inst_(inst), p_(p), vars_(vars), opt_(opt) {
    const std::size_t cells = inst.num_demand() * inst.num_soc();
    if (vars_.x.size() != inst.num_supply() * cells) throw std::invalid_argument("DecisionVars.x has the wrong size");
    if (!vars_.u_hat.empty() && vars_.u_hat.size() != cells)
      throw std::invalid_argument("DecisionVars.u_hat has the wrong size");
    if (vars_.price_choice.empty()) vars_.price_choice.resize(cells);
    if (vars_.price_choice.size() != cells) throw std::invalid_argument("DecisionVars.price_choice has the wrong size");
  }

  Lowered run(const CanonicalForm& form) {
    Lowered out;
    out.objective.sense = form.sense;
    for (const auto& [mono, coef] : form.poly) {
      if (mono.empty()) {
        out.objective.constant += coef;
      } else if (mono.size() == 1) {
        const Affine a = linear(mono[0]);
        for (const Term& t : a.terms) out.objective.terms.push_back({t.var, coef * t.coef});
        out.objective.constant += coef * a.constant;
      } else {
        product(mono, coef, out.objective);
      }
    }
    for (const AbsTerm& t : form.abs_terms) absolute(t, form.sense, out.objective);
    std::map<int, double> merged;
    for (const Term& t : out.objective.terms) merged[t.var] += t.coef;
    out.objective.terms.clear();
    for (const auto& [var, coef] : merged)
      if (coef != 0.0) out.objective.terms.push_back({var, coef});
    out.stats = stats_;
    return out;
  }

 private:
  std::size_t cell(int j, int k) const { return static_cast<std::size_t>(j) * inst_.num_soc() + static_cast<std::size_t>(k); }

  int x_var(const VarKey& key) const {
    const std::size_t idx =
        (static_cast<std::size_t>(key.a) * inst_.num_demand() + static_cast<std::size_t>(key.b)) * inst_.num_soc() +
        static_cast<std::size_t>(key.c);
    return vars_.x[idx];
  }

  int u_var(const VarKey& key) const {
    if (vars_.u_hat.empty()) return -1;
    return vars_.u_hat[cell(key.a, key.b)];
  }

  std::string fresh(const std::string& stem) {
    std::string name;
    do {
      name = "dsl_" + stem + "_" + std::to_string(counter_++);
    } while (p_.find(name));
    return name;
  }

  int add_aux(const std::string& stem, VarKind kind, double lo, double hi) {
    ++stats_.aux_variables;
    return p_.add_variable(fresh(stem), kind, lo, hi);
  }

  void add_row(const std::string& stem, std::vector<Term> terms, Relation rel, double rhs) {
    ++stats_.aux_constraints;
    p_.add_constraint(fresh(stem), std::move(terms), rel, rhs);
  }

  // Grid selection for fare (j,k), created and linked to the fare variable on first use.
  const std::vector<std::pair<int, double>>& choice(const VarKey& key) {
    auto& slot = vars_.price_choice[cell(key.a, key.b)];
    if (!slot.empty()) return slot;
    const int u = u_var(key);
    if (u < 0) throw std::invalid_argument("no variable or price grid for " + key.str());
    if (grid_.points.empty()) grid_ = uniform_price_grid(inst_, opt_.grid_points);
    std::vector<Term> one, link{{u, 1.0}};
    for (double g : grid_.at(static_cast<std::size_t>(key.a), static_cast<std::size_t>(key.b))) {
      const int r = add_aux("rho", VarKind::Binary, 0.0, 1.0);
      ++stats_.grid_binaries;
      slot.emplace_back(r, g);
      one.push_back({r, 1.0});
      link.push_back({r, -g});
    }
    add_row("pick", std::move(one), Relation::Equal, 1.0);
    add_row("link", std::move(link), Relation::Equal, 0.0);
    return slot;
  }

  Affine linear(const VarKey& key) {
    Affine a;
    if (key.kind == VarKey::Kind::X) {
      a.terms.push_back({x_var(key), 1.0});
    } else if (const int u = u_var(key); u >= 0) {
      a.terms.push_back({u, 1.0});
    } else {
      for (const auto& [r, g] : choice(key)) a.terms.push_back({r, g});
    }
    return a;
  }

  void product(const std::vector<VarKey>& mono, double coef, mip::Objective& obj) {
    if (mono.size() != 2 || mono[0].kind != VarKey::Kind::X || mono[1].kind != VarKey::Kind::UHat)
      throw std::invalid_argument("term not representable: only fare x allocation products can be lowered");
    const int x = x_var(mono[0]);
    const double hi = p_.variable(x).upper;
    if (!std::isfinite(hi)) throw std::invalid_argument("allocation variable needs a finite upper bound");
    for (const auto& [r, g] : choice(mono[1])) {
      const auto key = std::make_pair(r, x);
      auto it = products_.find(key);
      if (it == products_.end()) {
        const int t = add_aux("prod", VarKind::Integer, 0.0, hi);
        ++stats_.product_auxiliaries;
        add_row("prod_ub_rho", {{t, 1.0}, {r, -hi}}, Relation::LessEqual, 0.0);
        add_row("prod_ub_x", {{t, 1.0}, {x, -1.0}}, Relation::LessEqual, 0.0);
        add_row("prod_lb", {{t, 1.0}, {x, -1.0}, {r, -hi}}, Relation::GreaterEqual, -hi);
        it = products_.emplace(key, t).first;
      }
      obj.terms.push_back({it->second, coef * g});
    }
  }

  void absolute(const AbsTerm& at, Sense sense, mip::Objective& obj) {
    Affine inner;
    for (const auto& [mono, c] : at.inner) {
      if (mono.empty()) {
        inner.constant += c;
        continue;
      }
      const Affine a = linear(mono[0]);
      for (const Term& t : a.terms) inner.terms.push_back({t.var, c * t.coef});
      inner.constant += c * a.constant;
    }
    double lo = inner.constant, hi = inner.constant;
    for (const Term& t : inner.terms) {
      const auto& v = p_.variable(t.var);
      lo += t.coef > 0 ? t.coef * v.lower : t.coef * v.upper;
      hi += t.coef > 0 ? t.coef * v.upper : t.coef * v.lower;
    }
    const double big = std::max(std::fabs(lo), std::fabs(hi));
    const bool convex = (sense == Sense::Minimize) == (at.coef > 0);
    const int a = add_aux("abs", VarKind::Continuous, 0.0, std::isfinite(big) ? big : mip::kInf);
    ++stats_.abs_auxiliaries;
    // a >= inner and a >= -inner.
    std::vector<Term> ge_pos{{a, 1.0}}, ge_neg{{a, 1.0}};
    for (const Term& t : inner.terms) {
      ge_pos.push_back({t.var, -t.coef});
      ge_neg.push_back({t.var, t.coef});
    }
    add_row("abs_pos", ge_pos, Relation::GreaterEqual, inner.constant);
    add_row("abs_neg", ge_neg, Relation::GreaterEqual, -inner.constant);
    if (!convex) {
      if (!std::isfinite(big)) throw std::invalid_argument("abs term needs bounded arguments in this sense");
      const double m = 2.0 * big;
      const int beta = add_aux("abs_side", VarKind::Binary, 0.0, 1.0);
      // a <= inner + m (1 - beta) and a <= -inner + m beta.
      std::vector<Term> le_pos{{a, 1.0}, {beta, m}}, le_neg{{a, 1.0}, {beta, -m}};
      for (const Term& t : inner.terms) {
        le_pos.push_back({t.var, -t.coef});
        le_neg.push_back({t.var, t.coef});
      }
      add_row("abs_le_pos", le_pos, Relation::LessEqual, inner.constant + m);
      add_row("abs_le_neg", le_neg, Relation::LessEqual, -inner.constant);
    }
    obj.terms.push_back({a, at.coef});
  }

  const FleetInstance& inst_;
  mip::MipProblem& p_;
  DecisionVars& vars_;
  const LowerOptions& opt_;
  PriceGrid grid_;
  LoweringStats stats_;
  std::map<std::pair<int, int>, int> products_;
  long counter_ = 0;
};

}  // namespace

Lowered lower_to_mip(const ObjectiveAst& ast, const FleetInstance& instance, mip::MipProblem& problem,
                     DecisionVars& vars, const LowerOptions& options) {
  const CanonicalForm form = canonicalize(ast, instance);
  return Lowerer(instance, problem, vars, options).run(form);
}

}  // namespace fleetopt::dsl
