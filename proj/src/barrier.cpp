#include "cbf/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double ClassKappa::operator()(double s) const {
  double out = s;
  for (int k = 1; k < power; ++k) out *= s;
  return gain * out;
}

double ClassKappa::ratio_from_log(double log_b) const {
  if (power == 1) return gain;
  return gain * std::exp(static_cast<double>(power - 1) * log_b);
}

void ClassKappa::validate() const {
  if (power < 1) throw InputError("ClassKappa: power must be a positive integer");
  if (!(gain > 0.0)) throw InputError("ClassKappa: gain must be positive");
}

BarrierTree BarrierTree::atom(AtomPtr a) {
  if (!a) throw InputError("BarrierTree::atom: null atom");
  BarrierTree t;
  t.kind_ = Kind::Atom;
  t.atom_ = std::move(a);
  return t;
}

BarrierTree BarrierTree::product(std::vector<BarrierTree> children) {
  if (children.empty()) throw InputError("BarrierTree::product: needs at least one child");
  BarrierTree t;
  t.kind_ = Kind::Product;
  t.children_ = std::move(children);
  return t;
}

BarrierTree BarrierTree::sum(std::vector<BarrierTree> children) {
  if (children.empty()) throw InputError("BarrierTree::sum: needs at least one child");
  BarrierTree t;
  t.kind_ = Kind::Sum;
  t.children_ = std::move(children);
  return t;
}

int BarrierTree::sum_node_count() const {
  int n = kind_ == Kind::Sum ? 1 : 0;
  for (const auto& c : children_) n += c.sum_node_count();
  return n;
}

std::vector<std::string> BarrierTree::atom_labels() const {
  std::vector<std::string> out;
  if (kind_ == Kind::Atom) {
    out.push_back(atom_->label());
    return out;
  }
  for (const auto& c : children_) {
    auto sub = c.atom_labels();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

BarrierTree compose_and(std::vector<BarrierTree> trees) {
  if (trees.empty()) throw InputError("compose_and: empty tree list");
  return BarrierTree::product(std::move(trees));
}

BarrierTree compose_or(std::vector<BarrierTree> trees) {
  if (trees.empty()) throw InputError("compose_or: empty tree list");
  return BarrierTree::sum(std::move(trees));
}

namespace {

struct EvalNode {
  double value;      // linear domain, saturates at +inf
  double log_value;  // exact in log domain; -inf when value == 0
};

EvalNode eval_rec(const BarrierTree& tree, const EnsembleState& x, BarrierEvaluation& out) {
  switch (tree.kind()) {
    case BarrierTree::Kind::Atom: {
      const double h = tree.atom_ref().raw_value(x);
      const double b = h > 0.0 ? h : 0.0;
      out.per_atom.push_back({tree.atom_ref().label(), h, b});
      return {b, b > 0.0 ? std::log(b) : kNegInf};
    }
    case BarrierTree::Kind::Product: {
      // Reserve this node's Sum descendants' mask slots in pre-order.
      double value = 1.0;
      double log_value = 0.0;
      for (const auto& c : tree.children()) {
        const EvalNode e = eval_rec(c, x, out);
        value *= e.value;
        log_value += e.log_value;
      }
      if (std::isnan(log_value)) log_value = kNegInf;  // 0 * inf over children
      return {value, log_value};
    }
    case BarrierTree::Kind::Sum: {
      const size_t mask_slot = out.active_branch_mask.size();
      out.active_branch_mask.push_back(0);
      double value = 0.0;
      std::vector<double> logs;
      logs.reserve(tree.children().size());
      int child_index = 0;
      for (const auto& c : tree.children()) {
        const EvalNode e = eval_rec(c, x, out);
        value += e.value;
        logs.push_back(e.log_value);
        if (e.value > kBranchDropTol && child_index < 64)
          out.active_branch_mask[mask_slot] |= (std::uint64_t{1} << child_index);
        ++child_index;
      }
      // log-sum-exp over child log values
      const double m = *std::max_element(logs.begin(), logs.end());
      double log_value = kNegInf;
      if (m > kNegInf) {
        double acc = 0.0;
        for (double l : logs) acc += std::exp(l - m);
        log_value = m + std::log(acc);
      }
      return {value, log_value};
    }
  }
  throw InputError("eval_value: unreachable tree kind");
}

}  // namespace

BarrierEvaluation eval_value(const BarrierTree& tree, const EnsembleState& x) {
  if (!x.finite()) throw InputError("eval_value: non-finite ensemble state");
  BarrierEvaluation out;
  const EvalNode root = eval_rec(tree, x, out);
  out.value = root.value;
  out.log_value = root.log_value;
  return out;
}

bool membership(const BarrierTree& tree, const EnsembleState& x) {
  return eval_value(tree, x).log_value > kNegInf;
}

namespace {

struct DerivNode {
  double value;
  double deriv;
};

DerivNode b_deriv_rec(const BarrierTree& tree, const EnsembleState& x,
                      const Eigen::VectorXd& q, double kink_tol) {
  switch (tree.kind()) {
    case BarrierTree::Kind::Atom: {
      const BarrierAtom& a = tree.atom_ref();
      const double h = a.raw_value(x);
      if (h < -kink_tol) return {0.0, 0.0};  // constant-zero piece
      const double dh = a.gradient(x).dot(q);
      if (h > kink_tol) return {h, dh};                        // smooth piece
      return {h > 0.0 ? h : 0.0, std::max(dh, 0.0)};           // kink selection
    }
    case BarrierTree::Kind::Product: {
      const auto& cs = tree.children();
      std::vector<DerivNode> child(cs.size());
      for (size_t k = 0; k < cs.size(); ++k) child[k] = b_deriv_rec(cs[k], x, q, kink_tol);
      // prefix[k] = prod of values before k, suffix[k] = prod after k
      std::vector<double> prefix(cs.size(), 1.0), suffix(cs.size(), 1.0);
      for (size_t k = 1; k < cs.size(); ++k) prefix[k] = prefix[k - 1] * child[k - 1].value;
      for (size_t k = cs.size() - 1; k-- > 0;) suffix[k] = suffix[k + 1] * child[k + 1].value;
      double value = prefix.back() * child.back().value;
      double deriv = 0.0;
      for (size_t k = 0; k < cs.size(); ++k) deriv += child[k].deriv * prefix[k] * suffix[k];
      return {value, deriv};
    }
    case BarrierTree::Kind::Sum: {
      double value = 0.0, deriv = 0.0;
      for (const auto& c : tree.children()) {
        const DerivNode d = b_deriv_rec(c, x, q, kink_tol);
        value += d.value;
        deriv += d.deriv;
      }
      return {value, deriv};
    }
  }
  throw InputError("b_derivative: unreachable tree kind");
}

}  // namespace

double b_derivative(const BarrierTree& tree, const EnsembleState& x,
                    const Eigen::VectorXd& q, double kink_tol) {
  if (!x.finite()) throw InputError("b_derivative: non-finite ensemble state");
  if (q.size() != x.state_dim()) throw InputError("b_derivative: direction has wrong length");
  return b_deriv_rec(tree, x, q, kink_tol).deriv;
}

namespace {

// Collects labels of atoms that keep a zero-valued subtree at zero: any zero
// child of a Product, every zero child of a Sum.
void collect_blockers(const BarrierTree& tree, const EnsembleState& x,
                      std::vector<std::string>& out) {
  switch (tree.kind()) {
    case BarrierTree::Kind::Atom:
      if (!(tree.atom_ref().raw_value(x) > 0.0)) out.push_back(tree.atom_ref().label());
      return;
    case BarrierTree::Kind::Product:
    case BarrierTree::Kind::Sum:
      for (const auto& c : tree.children()) collect_blockers(c, x, out);
      return;
  }
}

// Per-node linearization carried as value-relative quantities:
//   rel_drift = (L_f node)/value,  rel_row = (L_g node)/value.
// The ratios stay O(per-atom magnitudes) where the raw product would
// under/overflow.
struct LinNode {
  double log_value;  // -inf when the subtree value is 0
  double rel_drift;
  Eigen::VectorXd rel_row;
};

LinNode lin_rec(const BarrierTree& tree, const EnsembleState& x, double drop_tol, int dim_u) {
  switch (tree.kind()) {
    case BarrierTree::Kind::Atom: {
      const BarrierAtom& a = tree.atom_ref();
      const double h = a.raw_value(x);
      if (!(h > 0.0)) return {kNegInf, 0.0, Eigen::VectorXd::Zero(dim_u)};
      return {std::log(h), a.drift_term(x) / h, a.control_row(x) / h};
    }
    case BarrierTree::Kind::Product: {
      LinNode node{0.0, 0.0, Eigen::VectorXd::Zero(dim_u)};
      for (const auto& c : tree.children()) {
        const LinNode e = lin_rec(c, x, drop_tol, dim_u);
        if (e.log_value == kNegInf) {
          node.log_value = kNegInf;  // zero factor: the whole product is 0
          continue;
        }
        node.log_value += e.log_value;
        node.rel_drift += e.rel_drift;
        node.rel_row += e.rel_row;
      }
      return node;
    }
    case BarrierTree::Kind::Sum: {
      const double log_drop = std::log(drop_tol);
      std::vector<LinNode> kept;
      for (const auto& c : tree.children()) {
        LinNode e = lin_rec(c, x, drop_tol, dim_u);
        if (e.log_value > log_drop) kept.push_back(std::move(e));
      }
      if (kept.empty()) {
        std::vector<std::string> ids;
        collect_blockers(tree, x, ids);
        throw InvarianceViolation(
            "eval_constraint: every branch of a Sum node is at or below the drop tolerance",
            std::move(ids));
      }
      double m = kNegInf;
      for (const auto& e : kept) m = std::max(m, e.log_value);
      double acc = 0.0;
      for (const auto& e : kept) acc += std::exp(e.log_value - m);
      LinNode node{m + std::log(acc), 0.0, Eigen::VectorXd::Zero(dim_u)};
      for (const auto& e : kept) {
        const double w = std::exp(e.log_value - node.log_value);
        node.rel_drift += w * e.rel_drift;
        node.rel_row += w * e.rel_row;
      }
      return node;
    }
  }
  throw InputError("eval_constraint: unreachable tree kind");
}

}  // namespace

LinearControlConstraint eval_constraint(const BarrierTree& tree, const EnsembleState& x,
                                        const ClassKappa& alpha, double drop_tol) {
  if (!x.finite()) throw InputError("eval_constraint: non-finite ensemble state");
  alpha.validate();
  const LinNode root = lin_rec(tree, x, drop_tol, x.control_dim());
  if (root.log_value == kNegInf) {
    std::vector<std::string> ids;
    collect_blockers(tree, x, ids);
    throw InvarianceViolation("eval_constraint: state is outside the barrier's positive set",
                              std::move(ids));
  }
  LinearControlConstraint c;
  c.coeff = root.rel_row;
  c.offset = root.rel_drift + alpha.ratio_from_log(root.log_value);
  c.normalized = true;
  return c;
}

}  // namespace cbf
