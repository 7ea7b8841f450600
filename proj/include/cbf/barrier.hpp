#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cbf/ensemble.hpp"
#include "cbf/errors.hpp"

namespace cbf {

// Selection tolerance for the kink of max{h, 0}.
inline constexpr double kKinkTol = 1e-9;
// Sum children at or below this value contribute neither value nor gradient
// to a control constraint.
inline constexpr double kBranchDropTol = 1e-12;

// alpha(s) = gain * s^power, strictly increasing with alpha(0) = 0.
struct ClassKappa {
  int power = 1;
  double gain = 1.0;

  double operator()(double s) const;
  // alpha(B)/B computed from log(B); stays finite for very small/large B.
  double ratio_from_log(double log_b) const;
  void validate() const;
};

// One smooth-piece barrier objective B(x) = max{h(x), 0} over the ensemble
// state, together with the Lie-derivative pieces needed for linear-in-control
// constraints. Implementations may return -inf from raw_value to mark states
// outside the domain of h (the zero piece is selected there).
class BarrierAtom {
 public:
  virtual ~BarrierAtom() = default;

  virtual std::string label() const = 0;
  virtual double raw_value(const EnsembleState& x) const = 0;
  // dh/d(p,v), length 4N. Only meaningful where raw_value is finite.
  virtual Eigen::VectorXd gradient(const EnsembleState& x) const = 0;
  // L_f h for the double-integrator drift: grad_p(h) . v
  virtual double drift_term(const EnsembleState& x) const = 0;
  // L_g h, length 2N: per-robot acceleration coefficients (= grad_v h).
  virtual Eigen::VectorXd control_row(const EnsembleState& x) const = 0;

  double value(const EnsembleState& x) const {
    const double h = raw_value(x);
    return h > 0.0 ? h : 0.0;
  }
};

using AtomPtr = std::shared_ptr<const BarrierAtom>;

// Composition tree of barrier atoms. Product encodes AND (intersection of the
// positive sets), Sum encodes OR (union). Immutable value type; cheap to copy.
class BarrierTree {
 public:
  enum class Kind { Atom, Product, Sum };

  static BarrierTree atom(AtomPtr a);
  static BarrierTree product(std::vector<BarrierTree> children);
  static BarrierTree sum(std::vector<BarrierTree> children);

  Kind kind() const { return kind_; }
  const BarrierAtom& atom_ref() const { return *atom_; }
  const AtomPtr& atom_ptr() const { return atom_; }
  const std::vector<BarrierTree>& children() const { return children_; }

  // Number of Sum nodes in pre-order; used to size branch activity masks.
  int sum_node_count() const;
  // Labels of every atom in the subtree, pre-order.
  std::vector<std::string> atom_labels() const;

 private:
  BarrierTree() = default;
  Kind kind_ = Kind::Atom;
  AtomPtr atom_;
  std::vector<BarrierTree> children_;
};

struct AtomValue {
  std::string id;
  double h;  // raw piece value (may be -inf outside the domain)
  double b;  // max{h, 0}
};

struct BarrierEvaluation {
  double value = 0.0;       // linear-domain composite value (>= 0)
  double log_value = 0.0;   // log(value); -inf when value == 0
  std::vector<AtomValue> per_atom;
  // One bit mask per Sum node (pre-order); bit k set iff child k contributed
  // a value above kBranchDropTol.
  std::vector<std::uint64_t> active_branch_mask;
};

// Affine-in-control admissible-set condition  a . u + c >= 0.
struct LinearControlConstraint {
  Eigen::VectorXd coeff;  // length 2N, units of s (per unit acceleration)
  double offset = 0.0;
  bool normalized = false;  // true when divided through by B(x)
};

// Composite value with per-atom breakdown. Product value is 0 if any child is
// 0; Sum value is 0 only if all children are 0. log_value is exact even where
// the linear-domain product under/overflows.
BarrierEvaluation eval_value(const BarrierTree& tree, const EnsembleState& x);

// True iff x lies in the tree's positive set (uses the log-domain value, so
// linear-domain underflow cannot produce a false negative).
bool membership(const BarrierTree& tree, const EnsembleState& x);

// One-sided directional derivative B'(x; q) of the tree value in state-space
// direction q (length 4N). Atoms select a piece: h above kink_tol selects the
// smooth piece, h below -kink_tol the constant-zero piece, and at the kink the
// max of the two one-sided candidates. Product/Sum combine children by the
// product/sum rules.
double b_derivative(const BarrierTree& tree, const EnsembleState& x,
                    const Eigen::VectorXd& q, double kink_tol = kKinkTol);

// AND / OR composition. Empty input -> InputError.
BarrierTree compose_and(std::vector<BarrierTree> trees);
BarrierTree compose_or(std::vector<BarrierTree> trees);

// Extracts a and c with  a.u + c >= 0  <=>  L_f B + L_g B u + alpha(B) >= 0
// at x. Computed in log domain and divided through by B(x) (normalized form):
// for a pure Product tree this is  sum_k L_g h_k/h_k . u + sum_k L_f h_k/h_k
// + alpha(B)/B >= 0 over the active atoms; Sum nodes mix children by their
// value weights, dropping branches at or below drop_tol.
// Throws InvarianceViolation when x is outside the set (offending atom labels
// attached) or when every branch of a Sum sits at or below drop_tol.
LinearControlConstraint eval_constraint(const BarrierTree& tree, const EnsembleState& x,
                                        const ClassKappa& alpha,
                                        double drop_tol = kBranchDropTol);

}  // namespace cbf
