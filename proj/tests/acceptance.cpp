// Acceptance suite: end-to-end checks of the bundled scenarios plus the
// randomized numerical audits, one printed line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "cbf/scenario.hpp"
#include "cbf/selftest.hpp"
#include "cbf/trajectory_io.hpp"
#include "qp_oracles.hpp"
#include "test_support.hpp"

using namespace cbf;

namespace {

const std::string kScenarioDir = SCENARIO_DIR;

int failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  if (!ok) ++failures;
}

struct TimedRun {
  TrajectoryLog log;
  SummaryMetrics m;
  double seconds;
};

TimedRun timed_run(const Scenario& sc) {
  const auto start = std::chrono::steady_clock::now();
  TrajectoryLog log = run(sc.config);
  const auto stop = std::chrono::steady_clock::now();
  SummaryMetrics m = metrics(log, sc.config);
  return {std::move(log), std::move(m),
          std::chrono::duration<double>(stop - start).count()};
}

bool property_passed(const SummaryMetrics& m, const std::string& name) {
  for (const auto& p : m.properties)
    if (p.name == name) return p.status == PropertyResult::Status::Pass;
  return false;
}

// ---- criterion 1: safety invariance on exp1 --------------------------------
void criterion_safety_invariance() {
  const Scenario sc = load_scenario(kScenarioDir + "/exp1_safety.json");
  const TimedRun r = timed_run(sc);
  int visited = 0;
  for (int v : r.m.waypoints_visited) visited += v;
  const bool ok = r.m.min_pair_distance >= sc.config.params.d_s && visited == 12 &&
                  r.seconds < 10.0 && r.m.invariance_held;
  std::ostringstream d;
  d << "min distance " << fmt9(r.m.min_pair_distance) << " >= 0.15, waypoints " << visited
    << "/12, runtime " << fmt9(r.seconds) << " s";
  report(1, "safety invariance on exp1", ok, d.str());
}

// ---- criterion 2: safety + static connectivity on exp2 ---------------------
void criterion_static_connectivity() {
  const Scenario sc = load_scenario(kScenarioDir + "/exp2_safety_connectivity.json");
  const TimedRun r = timed_run(sc);

  const bool safety_ok = r.m.min_pair_distance >= sc.config.params.d_s;
  const bool edge_ok = property_passed(r.m, "required_edge_2_3");
  const bool group1_ok = property_passed(r.m, "or_group_1");
  const bool group2_ok = property_passed(r.m, "or_group_2");
  const bool robot1_blocked =
      r.m.waypoints_visited[0] == 2;  // final waypoint out of connectivity reach
  const bool others_done = r.m.waypoints_visited[1] == 3 && r.m.waypoints_visited[2] == 3 &&
                           r.m.waypoints_visited[3] == 3;
  const bool ok = safety_ok && edge_ok && group1_ok && group2_ok && robot1_blocked &&
                  others_done && r.m.invariance_held && r.seconds < 10.0;
  std::ostringstream d;
  d << "min distance " << fmt9(r.m.min_pair_distance) << ", edge_2_3 "
    << (edge_ok ? "held" : "broken") << ", or-groups " << (group1_ok && group2_ok ? "held" : "broken")
    << ", robot 1 visited " << r.m.waypoints_visited[0] << "/3, min log B "
    << fmt9(r.m.min_log_b) << ", runtime " << fmt9(r.seconds) << " s";
  report(2, "safety + static connectivity on exp2", ok, d.str());
}

// ---- criterion 3: baseline contrast without the filter ----------------------
void criterion_baseline_contrast() {
  const Scenario sc = load_scenario(kScenarioDir + "/exp1_none.json");
  const TimedRun r = timed_run(sc);
  const bool ok = r.m.min_pair_distance < sc.config.params.d_s;
  std::ostringstream d;
  d << "min distance " << fmt9(r.m.min_pair_distance) << " < 0.15 without the certificate";
  report(3, "baseline contrast (no certificate)", ok, d.str());
}

// ---- criterion 4: dynamic connectivity with a forced switch -----------------
void criterion_dynamic_connectivity() {
  const Scenario sc = load_scenario(kScenarioDir + "/exp3_dynamic.json");
  const TimedRun r = timed_run(sc);
  const bool connected = property_passed(r.m, "dynamic_connectivity");
  const bool switched = r.m.graph_switches >= 1 && r.m.satisfied_graph.front() == 0 &&
                        r.m.satisfied_graph.back() == 1;
  const bool ok = connected && switched && r.m.invariance_held &&
                  r.m.min_pair_distance >= sc.config.params.d_s;
  std::ostringstream d;
  d << "always connected " << (connected ? "yes" : "no") << ", graph switches "
    << r.m.graph_switches << " (first " << (r.m.satisfied_graph.front() + 1) << ", last "
    << (r.m.satisfied_graph.back() + 1) << ")";
  report(4, "dynamic connectivity with graph switch", ok, d.str());
}

// ---- criterion 5: Lemma 1 equivalence ---------------------------------------
void criterion_lemma1() {
  std::mt19937_64 rng(501);
  const int n = 2;
  int agree = 0, total = 0;

  struct Child {
    bool is_sub = false;               // sub-node of the opposite kind
    std::vector<AtomPtr> atoms;        // its leaves (one entry for a direct atom)
  };

  for (int trial = 0; trial < 1000; ++trial) {
    // random 2-level tree: root Sum/Product over atoms and opposite sub-nodes
    const bool root_sum = rng() % 2;
    std::vector<Child> shape;
    std::vector<BarrierTree> children;
    int next_id = 0;
    const int n_children = 2 + static_cast<int>(rng() % 3);
    for (int c = 0; c < n_children; ++c) {
      Child child;
      child.is_sub = rng() % 2;
      const int leaves = child.is_sub ? 1 + static_cast<int>(rng() % 3) : 1;
      std::vector<BarrierTree> leaf_trees;
      for (int l = 0; l < leaves; ++l) {
        child.atoms.push_back(test::random_poly_atom(rng, n, next_id++));
        leaf_trees.push_back(BarrierTree::atom(child.atoms.back()));
      }
      children.push_back(!child.is_sub ? leaf_trees[0]
                         : root_sum    ? compose_and(leaf_trees)
                                       : compose_or(leaf_trees));
      shape.push_back(std::move(child));
    }
    const BarrierTree tree = root_sum ? compose_or(children) : compose_and(children);

    const EnsembleState x = test::random_state(rng, n);
    // boolean oracle straight from the atom values
    bool expect = !root_sum;
    for (const Child& child : shape) {
      bool child_in;
      if (!child.is_sub) {
        child_in = child.atoms[0]->value(x) > 0.0;
      } else {
        child_in = root_sum;  // AND under a Sum root, OR under a Product root
        for (const AtomPtr& a : child.atoms) {
          const bool in = a->value(x) > 0.0;
          child_in = root_sum ? (child_in && in) : (child_in || in);
        }
      }
      expect = root_sum ? (expect || child_in) : (expect && child_in);
    }
    ++total;
    if (membership(tree, x) == expect) ++agree;
  }
  std::ostringstream d;
  d << agree << "/" << total << " membership agreements";
  report(5, "Lemma 1 equivalence on random trees", agree == total, d.str());
}

// ---- criterion 6: gradient correctness --------------------------------------
void criterion_gradients() {
  TeamParams params;
  params.n = 4;
  params.max_accel = 2.0;
  params.max_speed = 0.2;
  params.d_s = 0.15;
  params.d_c = 0.6;
  const BarrierTree safety_tree = build_safety_certificate(params);
  std::mt19937_64 rng(601);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  double worst = 0.0;
  int states = 0;
  while (states < 100) {
    EnsembleState x = EnsembleState::zero(params.n);
    for (int i = 0; i < params.n; ++i) {
      x.p(i, 0) = unit(rng);
      x.p(i, 1) = unit(rng);
      x.v(i, 0) = params.max_speed * unit(rng);
      x.v(i, 1) = params.max_speed * unit(rng);
    }
    const BarrierEvaluation ev = eval_value(safety_tree, x);
    if (ev.log_value == -std::numeric_limits<double>::infinity()) continue;
    bool clear = true;
    for (const auto& av : ev.per_atom) clear = clear && av.h > 1e-2;
    for (int i = 0; i < params.n && clear; ++i)
      for (int j = i + 1; j < params.n; ++j)
        clear = clear && (position_of(x, i) - position_of(x, j)).norm() > params.d_s + 0.01;
    if (!clear) continue;
    ++states;

    // atom gradients against central differences
    for (int i = 0; i < params.n; ++i) {
      for (int j = i + 1; j < params.n; ++j) {
        const SafetyPairAtom atom(i, j, params);
        const ConnectivityPairAtom conn(i, j, params);
        for (const BarrierAtom* a :
             std::initializer_list<const BarrierAtom*>{&atom, &conn}) {
          const double h = a->raw_value(x);
          const double dist = (position_of(x, i) - position_of(x, j)).norm();
          if (!std::isfinite(h) || std::abs(h) < 1e-2) continue;
          if (a == static_cast<const BarrierAtom*>(&conn) && params.d_c - dist < 1e-2)
            continue;
          Eigen::VectorXd fd(x.state_dim());
          for (int k = 0; k < x.state_dim(); ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(x.state_dim());
            e[k] = 1.0;
            fd[k] =
                (a->raw_value(x.displaced(e, 1e-6)) - a->raw_value(x.displaced(e, -1e-6))) / 2e-6;
          }
          worst = std::max(worst, test::vec_rel_err(a->gradient(x), fd));
        }
      }
    }

    // constraint coefficients against d(log B)/dv by central differences
    const LinearControlConstraint cons = eval_constraint(safety_tree, x, ClassKappa{});
    for (int k = 0; k < 2 * params.n; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(x.state_dim());
      e[2 * params.n + k] = 1.0;
      const double fd = (eval_value(safety_tree, x.displaced(e, 1e-6)).log_value -
                         eval_value(safety_tree, x.displaced(e, -1e-6)).log_value) /
                        2e-6;
      worst = std::max(worst, test::rel_err(cons.coeff[k], fd));
    }
  }
  std::ostringstream d;
  d << "max relative error " << fmt9(worst) << " over 100 in-set states";
  report(6, "gradient and constraint-coefficient correctness", worst < 1e-5, d.str());
}

// ---- criterion 7: QP oracle equivalence -------------------------------------
void criterion_qp_oracle() {
  std::mt19937_64 rng(701);
  double worst_gap = 0.0, worst_kkt = 0.0;
  int grid_beats_solver = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const QpProblem p = test::random_problem(rng, 4, 3, 0.2);
    const QpSolution sol = solve(p);
    if (sol.status != QpStatus::Optimal) {
      ++grid_beats_solver;
      continue;
    }
    worst_kkt = std::max(worst_kkt, sol.kkt_residual);
    const double grid = test::grid_oracle(p, 0.01);
    if (std::isfinite(grid)) {
      worst_gap = std::max(worst_gap, sol.objective(p) - grid);
      if (grid < sol.objective(p) - 1e-6) ++grid_beats_solver;
    }
  }

  int idempotent = 0, slack_total = 0;
  while (slack_total < 100) {
    QpProblem p = test::random_problem(rng, 4, 3, 0.5);
    if (!test::feasible_point(p, p.nominal)) continue;
    ++slack_total;
    const QpSolution sol = solve(p);
    bool same = sol.status == QpStatus::Optimal;
    for (int i = 0; i < 4 && same; ++i) same = sol.u[i] == p.nominal[i];
    if (same) ++idempotent;
  }

  const bool ok = worst_gap < 1e-3 && grid_beats_solver == 0 && idempotent == slack_total &&
                  worst_kkt < 1e-8;
  std::ostringstream d;
  d << "objective gap vs grid " << fmt9(std::max(worst_gap, 0.0)) << ", idempotent "
    << idempotent << "/" << slack_total << ", max KKT residual " << fmt9(worst_kkt);
  report(7, "QP oracle equivalence", ok, d.str());
}

// ---- criterion 8: validity audits -------------------------------------------
void criterion_validity() {
  bool ok = true;
  std::ostringstream d;
  for (const char* name : {"exp1_safety", "exp2_safety_connectivity"}) {
    const Scenario sc = load_scenario(kScenarioDir + "/" + name + ".json");
    const auto tree = build_certificate(sc.config.params, sc.config.certificate);
    const auto [lo, hi] = scenario_arena(sc.config);
    const auto sampler = make_arena_sampler(sc.config.params, *tree, lo, hi);
    const ValidityReport r = check_validity(*tree, sc.config.params, sc.config.alpha, sampler,
                                            1000, sc.config.seed);
    ok = ok && r.evaluated == 1000 && r.feasible_fraction == 1.0;
    d << name << ": feasible " << r.feasible << "/" << r.evaluated << " worst margin "
      << fmt9(r.worst_margin) << "; ";
  }
  report(8, "certificate validity (admissible sets non-empty)", ok, d.str());
}

// ---- criterion 9: determinism -----------------------------------------------
void criterion_determinism() {
  bool ok = true;
  std::ostringstream d;
  for (const char* name : {"exp1_safety", "exp3_dynamic"}) {
    const Scenario sc = load_scenario(kScenarioDir + "/" + name + ".json");
    const std::string csv1 = trajectory_csv(run(sc.config));
    const std::string csv2 = trajectory_csv(run(sc.config));
    const bool same = csv1 == csv2;
    ok = ok && same;
    d << name << (same ? " identical" : " DIFFERS") << "; ";
  }
  report(9, "bitwise deterministic trajectory tables", ok, d.str());
}

}  // namespace

int main() {
  criterion_safety_invariance();
  criterion_static_connectivity();
  criterion_baseline_contrast();
  criterion_dynamic_connectivity();
  criterion_lemma1();
  criterion_gradients();
  criterion_qp_oracle();
  criterion_validity();
  criterion_determinism();
  std::printf("%d/9 acceptance criteria passed\n", 9 - failures);
  return failures;
}
