#include "fleetopt/rf_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fleetopt {

using mip::Relation;
using mip::Term;
using mip::VarKind;

void EncoderConfig::validate() const {
  if (!(epsilon_strict > 0.0)) throw std::invalid_argument("epsilon_strict must be positive");
  if (big_m_mode == BigM::Global && !(global_m > 0.0 && std::isfinite(global_m)))
    throw std::invalid_argument("global_m must be positive and finite");
}

namespace {

int copy_pruned(const Tree& src, int n, std::span<const std::optional<double>> fixed, Tree& dst, int parent) {
  const TreeNode* node = &src.nodes[static_cast<std::size_t>(n)];
  while (!node->is_leaf() && static_cast<std::size_t>(node->feature) < fixed.size() &&
         fixed[static_cast<std::size_t>(node->feature)]) {
    n = *fixed[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right;
    node = &src.nodes[static_cast<std::size_t>(n)];
  }
  const int id = static_cast<int>(dst.nodes.size());
  dst.nodes.push_back(*node);
  dst.nodes.back().parent = parent;
  if (node->is_leaf()) {
    dst.nodes.back().left = dst.nodes.back().right = -1;
    return id;
  }
  const int l = copy_pruned(src, node->left, fixed, dst, id);
  const int r = copy_pruned(src, node->right, fixed, dst, id);
  dst.nodes[static_cast<std::size_t>(id)].left = l;
  dst.nodes[static_cast<std::size_t>(id)].right = r;
  return id;
}

std::string tag(std::size_t h, std::size_t n) { return "[" + std::to_string(h) + "," + std::to_string(n) + "]"; }

}  // namespace

Tree prune(const Tree& tree, std::span<const std::optional<double>> fixed) {
  Tree out;
  if (tree.nodes.empty()) return out;
  copy_pruned(tree, 0, fixed, out, -1);
  return out;
}

LeafTrace trace_leaf(const Tree& tree, std::span<const double> features) {
  LeafTrace t;
  int n = 0;
  for (;;) {
    t.path.push_back(n);
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(n)];
    if (node.is_leaf()) break;
    n = features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  t.leaf = n;
  return t;
}

std::vector<std::pair<int, double>> MipFragment::q_assignment(std::span<const double> features) const {
  std::vector<std::pair<int, double>> out;
  for (std::size_t h = 0; h < trees.size(); ++h) {
    if (q[h].empty()) continue;
    std::vector<double> value(trees[h].nodes.size(), 0.0);
    for (int n : trace_leaf(trees[h], features).path) value[static_cast<std::size_t>(n)] = 1.0;
    for (std::size_t n = 0; n < value.size(); ++n) out.emplace_back(q[h][n], value[n]);
  }
  return out;
}

MipFragment encode(const Forest& forest, std::span<const std::optional<double>> fixed,
                   std::span<const int> feature_var, mip::MipProblem& problem, const EncoderConfig& config) {
  config.validate();
  const std::size_t p = forest.schema.size();
  if (fixed.size() != p || feature_var.size() != p) throw std::invalid_argument("feature maps do not match the schema");
  MipFragment frag;
  frag.feature_var.assign(feature_var.begin(), feature_var.end());
  frag.objective.sense = mip::Sense::Maximize;
  const double weight = 1.0 / static_cast<double>(forest.trees.size());

  for (std::size_t f = 0; f < p; ++f) {
    if (fixed[f]) {
      frag.feature_var[f] = -1;
      continue;
    }
    const int v = feature_var[f];
    if (v < 0 || v >= problem.num_variables())
      throw std::invalid_argument("feature " + forest.schema.names[f] + " is neither fixed nor mapped");
  }

  for (std::size_t h = 0; h < forest.trees.size(); ++h) {
    frag.trees.push_back(prune(forest.trees[h], fixed));
    const Tree& t = frag.trees.back();
    std::vector<int>& q = frag.q.emplace_back();
    if (t.nodes.size() == 1) {
      frag.objective.constant += weight * t.nodes[0].value;
      continue;
    }
    for (std::size_t n = 0; n < t.nodes.size(); ++n) {
      const double lo = n == 0 ? 1.0 : 0.0;
      q.push_back(problem.add_variable("q" + tag(h, n), VarKind::Binary, lo, 1.0));
    }
    frag.num_q += static_cast<int>(t.nodes.size());
    std::vector<Term> leaves;
    for (std::size_t n = 0; n < t.nodes.size(); ++n) {
      const TreeNode& node = t.nodes[n];
      if (node.is_leaf()) {
        leaves.push_back({q[n], 1.0});
        frag.objective.terms.push_back({q[n], weight * node.value});
        continue;
      }
      const int y = frag.feature_var[static_cast<std::size_t>(node.feature)];
      const mip::Variable& var = problem.variable(y);
      if (!std::isfinite(var.lower) || !std::isfinite(var.upper))
        throw std::invalid_argument("unbounded decision feature " + var.name);
      const int ql = q[static_cast<std::size_t>(node.left)];
      const int qr = q[static_cast<std::size_t>(node.right)];
      const double b = node.threshold;
      const double b_right = var.is_integral() ? std::floor(b) + 1.0 : b + config.epsilon_strict;
      double m_left = std::max(0.0, var.upper - b);
      double m_right = std::max(0.0, b_right - var.lower);
      if (config.big_m_mode == EncoderConfig::BigM::Global) m_left = m_right = config.global_m;
      // y - M (1 - q_l) <= b  and  y + M (1 - q_r) >= b_right
      problem.add_constraint("rf_left" + tag(h, n), {{y, 1.0}, {ql, m_left}}, Relation::LessEqual, b + m_left);
      problem.add_constraint("rf_right" + tag(h, n), {{y, 1.0}, {qr, -m_right}}, Relation::GreaterEqual,
                             b_right - m_right);
      problem.add_constraint("rf_flow" + tag(h, n), {{ql, 1.0}, {qr, 1.0}, {q[n], -1.0}}, Relation::Equal, 0.0);
      frag.branching_rows += 2;
      ++frag.flow_rows;
    }
    problem.add_constraint("rf_leaf[" + std::to_string(h) + "]", std::move(leaves), Relation::Equal, 1.0);
    ++frag.leaf_rows;
  }
  return frag;
}

FeatureMip build_feature_mip(const FleetInstance& instance, const Forest& forest, std::span<const double> exogenous,
                             const EncoderConfig& config) {
  instance.validate();
  const FeatureSchema expected = make_schema(
      std::vector<std::string>(forest.schema.names.begin(),
                               forest.schema.names.begin() + static_cast<std::ptrdiff_t>(forest.schema.exogenous_count)),
      instance);
  if (expected.names != forest.schema.names) throw std::invalid_argument("forest schema does not match the instance");
  if (exogenous.size() != forest.schema.exogenous_count) throw std::invalid_argument("exogenous block size mismatch");

  FeatureMip m;
  const std::size_t I = instance.num_supply(), J = instance.num_demand(), K = instance.num_soc();
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < K; ++k)
        m.x.push_back(m.problem.add_variable(x_name(i, j, k), VarKind::Integer, 0.0, instance.supply(i, k)));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < K; ++k)
      m.u_hat.push_back(
          m.problem.add_variable(u_hat_name(j, k), VarKind::Continuous, instance.fare_min, instance.fare_max));
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<Term> row;
      for (std::size_t j = 0; j < J; ++j) row.push_back({m.x[(i * J + j) * K + k], 1.0});
      m.problem.add_constraint("supply[" + std::to_string(i) + "," + std::to_string(k) + "]", std::move(row),
                               Relation::LessEqual, instance.supply(i, k));
    }

  std::vector<std::optional<double>> fixed(forest.schema.size());
  std::vector<int> vars(forest.schema.size(), -1);
  for (std::size_t f = 0; f < exogenous.size(); ++f) fixed[f] = exogenous[f];
  const std::size_t base = forest.schema.exogenous_count;
  for (std::size_t q = 0; q < m.x.size(); ++q) vars[base + q] = m.x[q];
  for (std::size_t q = 0; q < m.u_hat.size(); ++q) vars[base + m.x.size() + q] = m.u_hat[q];
  m.fragment = encode(forest, fixed, vars, m.problem, config);
  m.problem.set_objective(m.fragment.objective);
  return m;
}

Decision decision_from_feature_solution(const FleetInstance& instance, const FeatureMip& model,
                                        std::span<const double> values) {
  Decision d(instance);
  for (std::size_t q = 0; q < model.x.size(); ++q)
    d.x[q] = static_cast<int>(std::lround(values[static_cast<std::size_t>(model.x[q])]));
  for (std::size_t q = 0; q < model.u_hat.size(); ++q)
    d.u_hat.data()[q] = std::clamp(values[static_cast<std::size_t>(model.u_hat[q])], instance.fare_min, instance.fare_max);
  return d;
}

}  // namespace fleetopt
