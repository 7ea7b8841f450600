#include "cbf/selftest.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "cbf/certificates.hpp"
#include "cbf/qp.hpp"
#include "cbf/trajectory_io.hpp"

namespace cbf {

namespace {

TeamParams bench_params() {
  TeamParams p;
  p.n = 4;
  p.max_accel = 2.0;
  p.max_speed = 0.4;
  p.d_s = 0.15;
  p.d_c = 0.6;
  return p;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

double vec_rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

// Central finite difference of an atom's raw value along every state coordinate.
Eigen::VectorXd fd_gradient(const BarrierAtom& atom, const EnsembleState& x, double h) {
  const int dim = x.state_dim();
  Eigen::VectorXd g(dim);
  for (int k = 0; k < dim; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[k] = 1.0;
    g[k] = (atom.raw_value(x.displaced(e, h)) - atom.raw_value(x.displaced(e, -h))) / (2.0 * h);
  }
  return g;
}

// In-set sample with all atoms comfortably away from their kinks.
EnsembleState smooth_sample(const BarrierTree& tree, const TeamParams& params,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  std::uniform_real_distribution<double> vel(-params.max_speed, params.max_speed);
  EnsembleState x = EnsembleState::zero(params.n);
  while (true) {
    for (int i = 0; i < params.n; ++i) {
      x.p(i, 0) = pos(rng);
      x.p(i, 1) = pos(rng);
      x.v(i, 0) = vel(rng);
      x.v(i, 1) = vel(rng);
    }
    const BarrierEvaluation eval = eval_value(tree, x);
    if (eval.log_value == -std::numeric_limits<double>::infinity()) continue;
    bool smooth = true;
    for (const auto& a : eval.per_atom)
      smooth = smooth && std::isfinite(a.h) && std::abs(a.h) > 1e-3;
    if (smooth) return x;
  }
}

SelftestResult gradient_suite(const std::string& name, bool connectivity, std::mt19937_64& rng) {
  const TeamParams params = bench_params();
  // sampling tree: safety-only keeps the draw cheap; connectivity atoms are
  // evaluated wherever their domain is active
  const BarrierTree tree = build_safety_certificate(params);
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    const EnsembleState x = smooth_sample(tree, params, rng);
    for (int i = 0; i < params.n && checked < 100; ++i) {
      for (int j = i + 1; j < params.n && checked < 100; ++j) {
        std::shared_ptr<BarrierAtom> atom;
        if (connectivity)
          atom = std::make_shared<ConnectivityPairAtom>(i, j, params);
        else
          atom = std::make_shared<SafetyPairAtom>(i, j, params);
        const double h = atom->raw_value(x);
        if (!std::isfinite(h) || std::abs(h) < 1e-3) continue;
        // keep clear of the sqrt-domain boundary as well
        const double dist = (position_of(x, i) - position_of(x, j)).norm();
        if (!connectivity && dist - params.d_s < 1e-2) continue;
        if (connectivity && params.d_c - dist < 1e-2) continue;
        worst = std::max(worst, vec_rel_err(atom->gradient(x), fd_gradient(*atom, x, 1e-6)));
        ++checked;
      }
    }
  }
  return {name, worst, 1e-5, worst <= 1e-5};
}

SelftestResult constraint_suite(std::mt19937_64& rng) {
  const TeamParams params = bench_params();
  const BarrierTree tree = build_safety_certificate(params);
  const ClassKappa alpha;
  double worst = 0.0;
  for (int s = 0; s < 25; ++s) {
    const EnsembleState x = smooth_sample(tree, params, rng);
    const LinearControlConstraint cons = eval_constraint(tree, x, alpha);
    const int n = params.n;
    // coefficient k of the normalized constraint equals d(log B)/d v_k
    for (int k = 0; k < 2 * n; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(4 * n);
      e[2 * n + k] = 1.0;
      const double fd = (eval_value(tree, x.displaced(e, 1e-6)).log_value -
                         eval_value(tree, x.displaced(e, -1e-6)).log_value) /
                        2e-6;
      worst = std::max(worst, rel_err(cons.coeff[k], fd));
    }
    // drift part of the offset equals d(log B) along (v, 0)
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(4 * n);
    for (int i = 0; i < n; ++i) dir.segment<2>(2 * i) = velocity_of(x, i);
    const double fd_drift = (eval_value(tree, x.displaced(dir, 1e-6)).log_value -
                             eval_value(tree, x.displaced(dir, -1e-6)).log_value) /
                            2e-6;
    worst = std::max(worst, rel_err(cons.offset - alpha.gain, fd_drift));
  }
  return {"constraint_coeff_fd", worst, 1e-5, worst <= 1e-5};
}

std::pair<SelftestResult, SelftestResult> qp_suite(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst_gap = 0.0;
  double worst_kkt = 0.0;
  const int dim = 4;
  const double box = 0.2;
  for (int inst = 0; inst < 20; ++inst) {
    QpProblem p;
    p.nominal = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return 0.3 * unit(rng); });
    p.lower = Eigen::VectorXd::Constant(dim, -box);
    p.upper = Eigen::VectorXd::Constant(dim, box);
    // one interior point shared by all rows keeps every instance feasible
    Eigen::VectorXd z =
        Eigen::VectorXd::NullaryExpr(dim, [&](int) { return 0.8 * box * unit(rng); });
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd a = Eigen::VectorXd::NullaryExpr(dim, [&](int) { return unit(rng); });
      p.inequalities.emplace_back(a, -a.dot(z) + 0.05);
    }
    const QpSolution sol = solve(p);
    if (sol.status != QpStatus::Optimal) continue;
    worst_kkt = std::max(worst_kkt, sol.kkt_residual);

    // brute-force grid: 0.01 step over the box
    double best = std::numeric_limits<double>::infinity();
    const int cells = static_cast<int>(std::lround(2 * box / 0.01));
    Eigen::VectorXd u(dim);
    for (int i0 = 0; i0 <= cells; ++i0) {
      u[0] = -box + i0 * 0.01;
      for (int i1 = 0; i1 <= cells; ++i1) {
        u[1] = -box + i1 * 0.01;
        for (int i2 = 0; i2 <= cells; ++i2) {
          u[2] = -box + i2 * 0.01;
          for (int i3 = 0; i3 <= cells; ++i3) {
            u[3] = -box + i3 * 0.01;
            bool feasible = true;
            for (const auto& [a, c] : p.inequalities)
              feasible = feasible && a.dot(u) + c >= 0.0;
            if (feasible) best = std::min(best, (u - p.nominal).squaredNorm());
          }
        }
      }
    }
    if (std::isfinite(best)) worst_gap = std::max(worst_gap, sol.objective(p) - best);
  }
  return {{"qp_vs_grid_oracle", std::max(worst_gap, 0.0), 1e-3, worst_gap <= 1e-3},
          {"qp_kkt_residual", worst_kkt, 1e-8, worst_kkt <= 1e-8}};
}

// Affine test atom for membership truth tables.
class AffineAtom : public BarrierAtom {
 public:
  AffineAtom(Eigen::VectorXd w, double b, int id) : w_(std::move(w)), b_(b), id_(id) {}
  std::string label() const override { return "affine_" + std::to_string(id_); }
  double raw_value(const EnsembleState& x) const override {
    const int n = x.count();
    double h = b_;
    for (int i = 0; i < n; ++i) {
      h += w_.segment<2>(2 * i).dot(position_of(x, i));
      h += w_.segment<2>(2 * n + 2 * i).dot(velocity_of(x, i));
    }
    return h;
  }
  Eigen::VectorXd gradient(const EnsembleState&) const override { return w_; }
  double drift_term(const EnsembleState& x) const override {
    double d = 0.0;
    for (int i = 0; i < x.count(); ++i)
      d += w_.segment<2>(2 * i).dot(velocity_of(x, i));
    return d;
  }
  Eigen::VectorXd control_row(const EnsembleState& x) const override {
    return w_.tail(2 * x.count());
  }

 private:
  Eigen::VectorXd w_;
  double b_;
  int id_;
};

SelftestResult lemma1_suite(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int n = 2;
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<BarrierTree> atoms;
    const int k = 2 + static_cast<int>(rng() % 4);
    for (int a = 0; a < k; ++a) {
      Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(4 * n, [&](int) { return unit(rng); });
      atoms.push_back(BarrierTree::atom(std::make_shared<AffineAtom>(w, unit(rng), a)));
    }
    EnsembleState x = EnsembleState::zero(n);
    for (int i = 0; i < n; ++i) {
      x.p(i, 0) = unit(rng);
      x.p(i, 1) = unit(rng);
      x.v(i, 0) = unit(rng);
      x.v(i, 1) = unit(rng);
    }
    bool any = false, all = true;
    for (const auto& a : atoms) {
      const bool in = membership(a, x);
      any = any || in;
      all = all && in;
    }
    if (membership(compose_or(atoms), x) != any) ++mismatches;
    if (membership(compose_and(atoms), x) != all) ++mismatches;
  }
  return {"lemma1_truth_table", static_cast<double>(mismatches), 0.0, mismatches == 0};
}

}  // namespace

std::vector<SelftestResult> run_selftest(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SelftestResult> results;
  results.push_back(gradient_suite("safety_gradient_fd", false, rng));
  results.push_back(gradient_suite("connectivity_gradient_fd", true, rng));
  results.push_back(constraint_suite(rng));
  const auto [grid, kkt] = qp_suite(rng);
  results.push_back(grid);
  results.push_back(kkt);
  results.push_back(lemma1_suite(rng));
  return results;
}

std::string selftest_table(const std::vector<SelftestResult>& results) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "suite" << std::setw(16) << "max_error"
      << std::setw(16) << "tolerance" << "status\n";
  for (const auto& r : results) {
    out << std::left << std::setw(28) << r.suite << std::setw(16) << fmt9(r.max_error)
        << std::setw(16) << fmt9(r.tolerance) << (r.passed ? "ok" : "FAILED") << "\n";
  }
  return out.str();
}

}  // namespace cbf
