#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cbf/errors.hpp"

namespace cbf {

inline constexpr double kFeasTol = 1e-8;
inline constexpr double kKktTol = 1e-8;

// minimize sum_i ||u_i - uhat_i||^2  s.t.  a.u + c >= 0 per inequality and
// lower <= u <= upper per coordinate.
struct QpProblem {
  Eigen::VectorXd nominal;  // objective center, length m
  std::vector<std::pair<Eigen::VectorXd, double>> inequalities;  // (a, c): a.u + c >= 0
  Eigen::VectorXd lower, upper;  // box bounds, length m

  int dim() const { return static_cast<int>(nominal.size()); }
  void validate() const;

  static QpProblem boxed(Eigen::VectorXd nominal, double box_radius);
};

// Unified constraint row view: general inequalities first (ids 0..K-1), then
// box lower rows (K..K+m-1: u_i - lo_i >= 0), then box upper rows
// (K+m..K+2m-1: hi_i - u_i >= 0). Multipliers and active-set ids use this
// indexing.
struct QpRow {
  Eigen::VectorXd a;
  double c;
};
std::vector<QpRow> unified_rows(const QpProblem& p);

enum class QpStatus { Optimal, Infeasible, IterationLimit };
std::string to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd u;
  QpStatus status = QpStatus::Optimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<int> active_set;        // unified row ids tight at u
  Eigen::VectorXd multipliers;        // per unified row, for J(u) = ||u-uhat||^2
  std::vector<int> infeasible_subset;  // certificate rows when status == Infeasible

  double objective(const QpProblem& p) const { return (u - p.nominal).squaredNorm(); }
};

// Max violation over KKT stationarity (2(u-uhat) - sum lambda_k a_k),
// primal/dual feasibility, and complementary slackness. `multipliers` follows
// the unified row ordering.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& multipliers);

// Dense active-set solver for the projection QP above. Starts from the
// unconstrained optimum uhat and adds violated constraints one at a time
// (most violated first, ties by lowest row id), dropping rows whose
// multipliers would turn negative. Holds the last optimal active set and
// tries it first on the next call, which collapses repeated solves in a
// control loop to a single factorization.
class QpSolver {
 public:
  explicit QpSolver(double feas_tol = kFeasTol) : feas_tol_(feas_tol) {}

  QpSolution solve(const QpProblem& problem);

  void reset_warm_start() { warm_ids_.clear(); }

 private:
  double feas_tol_;
  std::vector<int> warm_ids_;
};

// One-shot convenience wrapper (cold start).
QpSolution solve(const QpProblem& problem, double tol = kFeasTol);

}  // namespace cbf
