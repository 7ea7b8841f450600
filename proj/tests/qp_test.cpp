#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cbf/qp.hpp"
#include "qp_oracles.hpp"

using namespace cbf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using cbf::test::enumerate_oracle;
using cbf::test::ExactSolution;
using cbf::test::feasible_point;
using cbf::test::grid_oracle;
using cbf::test::random_problem;

}  // namespace

TEST_CASE("unconstrained optimum inside the box is returned unchanged") {
  QpProblem p = QpProblem::boxed(Eigen::Vector2d(1.0, 0.0), 3.0);
  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::Optimal);
  CHECK(sol.u[0] == 1.0);  // bitwise: the nominal passes through untouched
  CHECK(sol.u[1] == 0.0);
  CHECK(sol.iterations == 0);
  CHECK(sol.active_set.empty());
  CHECK(sol.kkt_residual == 0.0);
}

TEST_CASE("single halfspace projection matches the closed form") {
  QpProblem p = QpProblem::boxed(Eigen::Vector2d(1.0, 0.0), 3.0);
  Eigen::Vector2d a(1.0, 0.0);
  p.inequalities.emplace_back(a, -2.0);  // u_x - 2 >= 0
  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::Optimal);
  // uhat + a (-c - a.uhat)/||a||^2 = (2, 0)
  CHECK(sol.u[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sol.u[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.kkt_residual <= 1e-10);

  // analytic multiplier for J = ||u - uhat||^2: lambda = -2 (a.uhat + c)/||a||^2
  CHECK(sol.multipliers[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(kkt_residual(p, sol.u, sol.multipliers) <= 1e-10);
}

TEST_CASE("kkt_residual is exactly zero at an interior optimum") {
  QpProblem p = QpProblem::boxed(Eigen::Vector2d(0.5, -0.25), 1.0);
  p.inequalities.emplace_back(Eigen::Vector2d(1.0, 1.0), 5.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<int>(unified_rows(p).size()));
  CHECK(kkt_residual(p, p.nominal, zero) == 0.0);
}

TEST_CASE("kkt_residual is sensitive to perturbations of the optimum") {
  QpProblem p = QpProblem::boxed(Eigen::Vector2d(1.0, 0.0), 3.0);
  p.inequalities.emplace_back(Eigen::Vector2d(1.0, 0.0), -2.0);
  const QpSolution sol = solve(p);
  Eigen::VectorXd u = sol.u;
  u[0] += 0.1;
  CHECK(kkt_residual(p, u, sol.multipliers) > 0.01);
  CHECK_THROWS_AS(kkt_residual(p, Eigen::VectorXd::Zero(3), sol.multipliers), InputError);
}

TEST_CASE("solver matches the exact enumeration oracle on random problems") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const QpProblem p = random_problem(rng, 4, 3, 0.5);
    const QpSolution sol = solve(p);
    const ExactSolution exact = enumerate_oracle(p);
    REQUIRE(exact.feasible_exists);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK(std::abs(sol.objective(p) - exact.objective) <= 1e-8);
    CHECK((sol.u - exact.u).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(sol.kkt_residual <= kKktTol);
    CHECK(feasible_point(p, sol.u, kFeasTol));
  }
}

TEST_CASE("solver is never beaten by the grid oracle") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 25; ++trial) {
    const QpProblem p = random_problem(rng, 4, 3, 0.2);
    const QpSolution sol = solve(p);
    REQUIRE(sol.status == QpStatus::Optimal);
    const double grid = grid_oracle(p, 0.01);
    if (std::isfinite(grid)) {
      CHECK(sol.objective(p) <= grid + 1e-6);
      CHECK(grid - sol.objective(p) < 1e-1);  // grid resolution bound
    }
  }
}

TEST_CASE("idempotence: feasible nominals are returned bitwise") {
  std::mt19937_64 rng(107);
  int slack_instances = 0;
  while (slack_instances < 100) {
    QpProblem p = random_problem(rng, 4, 3, 0.5);
    if (!feasible_point(p, p.nominal)) continue;
    ++slack_instances;
    const QpSolution sol = solve(p);
    CHECK(sol.status == QpStatus::Optimal);
    for (int i = 0; i < 4; ++i) CHECK(sol.u[i] == p.nominal[i]);
    CHECK(sol.active_set.empty());
  }
}

TEST_CASE("infeasible problems are reported with a certificate subset") {
  QpProblem p = QpProblem::boxed(Eigen::Vector2d(0.0, 0.0), 1.0);
  p.inequalities.emplace_back(Eigen::Vector2d(1.0, 0.0), -2.0);   // u_x >= 2
  p.inequalities.emplace_back(Eigen::Vector2d(-1.0, 0.0), -2.0);  // u_x <= -2
  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::Infeasible);
  CHECK_FALSE(sol.infeasible_subset.empty());
  // the subset itself must be contradictory: its rows cannot all hold in the box
  // (here rows 0 and 1, or a row against a box bound)
  CHECK(sol.infeasible_subset.size() >= 2);
}

TEST_CASE("box-only conflicts are caught as infeasible") {
  QpProblem p = QpProblem::boxed(Eigen::Vector2d(0.0, 0.0), 1.0);
  p.inequalities.emplace_back(Eigen::Vector2d(0.0, 1.0), -1.5);  // u_y >= 1.5 > box
  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::Infeasible);
}

TEST_CASE("determinism: identical problems give bitwise identical solutions") {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 50; ++trial) {
    const QpProblem p = random_problem(rng, 6, 4, 0.7);
    const QpSolution s1 = solve(p);
    const QpSolution s2 = solve(p);
    REQUIRE(s1.status == s2.status);
    for (int i = 0; i < 6; ++i) CHECK(s1.u[i] == s2.u[i]);
    CHECK(s1.iterations == s2.iterations);
    CHECK(s1.active_set == s2.active_set);
  }
}

TEST_CASE("warm start reproduces the cold-start optimum") {
  std::mt19937_64 rng(113);
  QpSolver warm;
  for (int trial = 0; trial < 50; ++trial) {
    QpProblem p = random_problem(rng, 4, 2, 0.5);
    const QpSolution cold = solve(p);
    const QpSolution reused = warm.solve(p);
    REQUIRE(cold.status == reused.status);
    if (cold.status == QpStatus::Optimal) {
      CHECK((cold.u - reused.u).lpNorm<Eigen::Infinity>() <= 1e-9);
      CHECK(reused.kkt_residual <= kKktTol);
    }
    // shifting the nominal slightly keeps the same active set; the warm path
    // must still produce a KKT-clean answer
    p.nominal.array() += 0.01;
    const QpSolution shifted = warm.solve(p);
    if (shifted.status == QpStatus::Optimal) {
      const QpSolution check = solve(p);
      CHECK((shifted.u - check.u).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
  }
}

TEST_CASE("validation rejects malformed problems") {
  QpProblem p;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = QpProblem::boxed(Eigen::Vector2d(0.0, 0.0), 1.0);
  p.lower[0] = 2.0;  // lower above upper
  CHECK_THROWS_AS(p.validate(), InputError);
  p = QpProblem::boxed(Eigen::Vector2d(0.0, 0.0), 1.0);
  p.inequalities.emplace_back(Eigen::Vector3d(1.0, 0.0, 0.0), 0.0);
  CHECK_THROWS_AS(solve(p), InputError);
}
