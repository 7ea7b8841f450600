#include "cbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbf {

void QpProblem::validate() const {
  const int m = dim();
  if (m <= 0) throw InputError("QpProblem: empty nominal");
  if (!nominal.allFinite()) throw InputError("QpProblem: non-finite nominal");
  if (lower.size() != m || upper.size() != m)
    throw InputError("QpProblem: box bounds must match the problem dimension");
  if (!lower.allFinite() || !upper.allFinite())
    throw InputError("QpProblem: non-finite box bounds");
  for (int i = 0; i < m; ++i)
    if (!(lower[i] < upper[i])) throw InputError("QpProblem: box lower must be below upper");
  for (const auto& [a, c] : inequalities) {
    if (a.size() != m) throw InputError("QpProblem: inequality row has wrong length");
    if (!a.allFinite() || !std::isfinite(c))
      throw InputError("QpProblem: non-finite inequality coefficients");
  }
}

QpProblem QpProblem::boxed(Eigen::VectorXd nominal, double box_radius) {
  QpProblem p;
  const int m = static_cast<int>(nominal.size());
  p.nominal = std::move(nominal);
  p.lower = Eigen::VectorXd::Constant(m, -box_radius);
  p.upper = Eigen::VectorXd::Constant(m, box_radius);
  return p;
}

std::vector<QpRow> unified_rows(const QpProblem& p) {
  const int m = p.dim();
  std::vector<QpRow> rows;
  rows.reserve(p.inequalities.size() + 2 * m);
  for (const auto& [a, c] : p.inequalities) rows.push_back({a, c});
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    a[i] = 1.0;
    rows.push_back({a, -p.lower[i]});
  }
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    a[i] = -1.0;
    rows.push_back({a, p.upper[i]});
  }
  return rows;
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& multipliers) {
  problem.validate();
  const auto rows = unified_rows(problem);
  if (u.size() != problem.dim()) throw InputError("kkt_residual: point has wrong dimension");
  if (multipliers.size() != static_cast<int>(rows.size()))
    throw InputError("kkt_residual: multiplier vector has wrong length");

  Eigen::VectorXd stationarity = 2.0 * (u - problem.nominal);
  double primal = 0.0, dual = 0.0, comp = 0.0;
  for (size_t k = 0; k < rows.size(); ++k) {
    const double slack = rows[k].a.dot(u) + rows[k].c;
    stationarity -= multipliers[k] * rows[k].a;
    primal = std::max(primal, -slack);
    dual = std::max(dual, -multipliers[k]);
    comp = std::max(comp, std::abs(multipliers[k] * slack));
  }
  return std::max({stationarity.lpNorm<Eigen::Infinity>(), primal, dual, comp});
}

namespace {

// Least-squares pieces for the current working set W:
//   lambda solves the equality projection of o onto {a_k.u = -c_k, k in W},
//   u = o + A^T lambda.
struct EqSolve {
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;
  bool ok = false;
};

EqSolve solve_equality(const std::vector<QpRow>& rows, const std::vector<int>& W,
                       const Eigen::VectorXd& o) {
  EqSolve out;
  const int w = static_cast<int>(W.size());
  const int m = static_cast<int>(o.size());
  if (w == 0) {
    out.u = o;
    out.lambda = Eigen::VectorXd();
    out.ok = true;
    return out;
  }
  Eigen::MatrixXd A(w, m);
  Eigen::VectorXd c(w);
  for (int k = 0; k < w; ++k) {
    A.row(k) = rows[W[k]].a.transpose();
    c[k] = rows[W[k]].c;
  }
  const Eigen::MatrixXd gram = A * A.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return out;
  out.lambda = ldlt.solve(-(A * o + c));
  out.u = o + A.transpose() * out.lambda;
  // reject near-singular working sets
  const double residual = (A * out.u + c).lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, o.lpNorm<Eigen::Infinity>());
  out.ok = residual <= 1e-7 * scale;
  return out;
}

}  // namespace

QpSolution QpSolver::solve(const QpProblem& problem) {
  problem.validate();
  const auto rows = unified_rows(problem);
  const int m = problem.dim();
  const int n_rows = static_cast<int>(rows.size());
  const int max_iterations = 100 * m;
  const Eigen::VectorXd& o = problem.nominal;

  QpSolution sol;
  sol.multipliers = Eigen::VectorXd::Zero(n_rows);

  const auto finish = [&](Eigen::VectorXd u, const std::vector<int>& W,
                          const Eigen::VectorXd& lambdaW, QpStatus status) {
    sol.u = std::move(u);
    sol.status = status;
    sol.multipliers.setZero();
    for (size_t k = 0; k < W.size(); ++k)
      sol.multipliers[W[k]] = 2.0 * lambdaW[static_cast<int>(k)];  // J = ||u-uhat||^2 scale
    sol.active_set.clear();
    for (int k = 0; k < n_rows; ++k)
      if (std::abs(rows[k].a.dot(sol.u) + rows[k].c) <= feas_tol_) sol.active_set.push_back(k);
    sol.kkt_residual = kkt_residual(problem, sol.u, sol.multipliers);
    if (status == QpStatus::Optimal) warm_ids_ = W;
    return sol;
  };

  // Warm start: if the previous optimal active set still yields a KKT point,
  // accept it without running the active-set loop.
  if (!warm_ids_.empty() &&
      std::all_of(warm_ids_.begin(), warm_ids_.end(), [&](int k) { return k < n_rows; })) {
    const EqSolve eq = solve_equality(rows, warm_ids_, o);
    if (eq.ok && (eq.lambda.size() == 0 || eq.lambda.minCoeff() >= 0.0)) {
      bool feasible = true;
      for (int k = 0; k < n_rows && feasible; ++k)
        feasible = rows[k].a.dot(eq.u) + rows[k].c >= -feas_tol_;
      if (feasible) return finish(eq.u, warm_ids_, eq.lambda, QpStatus::Optimal);
    }
    warm_ids_.clear();
  }

  Eigen::VectorXd u = o;
  std::vector<int> W;
  Eigen::VectorXd lambdaW;  // multipliers of W, 1/2-scale convention

  int iterations = 0;
  while (true) {
    // most violated row; ties broken by lowest id
    int p = -1;
    double worst = -feas_tol_;
    for (int k = 0; k < n_rows; ++k) {
      const double slack = rows[k].a.dot(u) + rows[k].c;
      if (slack < worst) {
        worst = slack;
        p = k;
      }
    }
    if (p < 0) {
      sol.iterations = iterations;
      return finish(u, W, lambdaW, QpStatus::Optimal);
    }

    const auto drop_row = [&](int k) {
      const int wn = static_cast<int>(lambdaW.size());
      W.erase(W.begin() + k);
      Eigen::VectorXd reduced(wn - 1);
      reduced.head(k) = lambdaW.head(k);
      reduced.tail(wn - 1 - k) = lambdaW.tail(wn - 1 - k);
      lambdaW = reduced;
    };

    double lambda_p = 0.0;
    while (true) {
      if (++iterations > max_iterations) {
        sol.iterations = iterations;
        return finish(u, W, lambdaW, QpStatus::IterationLimit);
      }
      const int w = static_cast<int>(W.size());
      Eigen::VectorXd r(w);
      Eigen::VectorXd z = rows[p].a;
      if (w > 0) {
        Eigen::MatrixXd A(w, m);
        for (int k = 0; k < w; ++k) A.row(k) = rows[W[k]].a.transpose();
        const Eigen::MatrixXd gram = A * A.transpose();
        r = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(A * rows[p].a);
        z -= A.transpose() * r;
      }

      const double z2 = z.squaredNorm();
      const double a_scale = std::max(1.0, rows[p].a.squaredNorm());

      // dual blocking step: first working-set row whose multiplier hits zero
      double t1 = std::numeric_limits<double>::infinity();
      int blocker = -1;
      for (int k = 0; k < w; ++k) {
        if (r[k] > 1e-12) {
          const double t = std::max(lambdaW[k], 0.0) / r[k];
          if (t < t1 - 1e-15 || (std::abs(t - t1) <= 1e-15 && (blocker < 0 || W[k] < W[blocker]))) {
            t1 = t;
            blocker = k;
          }
        }
      }

      if (z2 > 1e-20 * a_scale) {
        const double slack_p = rows[p].a.dot(u) + rows[p].c;
        const double t2 = -slack_p / z2;
        const double t = std::min(t1, t2);
        u += t * z;
        for (int k = 0; k < w; ++k) lambdaW[k] -= t * r[k];
        lambda_p += t;
        if (t2 <= t1) {
          W.push_back(p);
          lambdaW.conservativeResize(w + 1);
          lambdaW[w] = lambda_p;
          break;  // p satisfied and active; pick the next violated row
        }
        drop_row(blocker);  // t1 finite implies a valid blocker
        continue;
      }

      if (blocker < 0) {
        // a_p lies in the span of W with no droppable row: the dual is
        // unbounded, the primal infeasible.
        sol.iterations = iterations;
        QpSolution out = finish(u, W, lambdaW, QpStatus::Infeasible);
        out.infeasible_subset = W;
        out.infeasible_subset.push_back(p);
        std::sort(out.infeasible_subset.begin(), out.infeasible_subset.end());
        return out;
      }
      for (int k = 0; k < w; ++k) lambdaW[k] -= t1 * r[k];
      lambda_p += t1;
      drop_row(blocker);
    }
  }
}

QpSolution solve(const QpProblem& problem, double tol) {
  QpSolver solver(tol);
  return solver.solve(problem);
}

}  // namespace cbf
