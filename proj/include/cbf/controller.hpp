#pragma once

#include <optional>
#include <vector>

#include "cbf/barrier.hpp"
#include "cbf/atoms.hpp"
#include "cbf/ensemble.hpp"
#include "cbf/qp.hpp"

namespace cbf {

struct ControllerGains {
  double k_p = 1.0;  // [1/s^2]
  double k_d = 2.0;  // [1/s]
  void validate() const;
};

struct WaypointPlan {
  std::vector<std::vector<Vec2>> per_robot;  // ordered waypoints [m]
  double arrival_radius = 0.05;              // [m]
  bool hold_at_final = true;

  void validate(int n) const;
  int total_waypoints() const;
};

// Go-to-goal PD law toward each robot's current waypoint,
//   uhat_i = -k_p (p_i - w_i) - k_d v_i,
// coordinate-clamped to +-max_accel. Waypoint indices advance when a robot is
// within the arrival radius; advancement is monotone, and a robot that cannot
// reach a waypoint keeps targeting it.
class WaypointController {
 public:
  WaypointController(WaypointPlan plan, ControllerGains gains, TeamParams params);

  // Advances arrivals at x, then returns the clamped PD control (2N).
  Eigen::VectorXd control(const EnsembleState& x);

  const std::vector<int>& current_index() const { return current_; }
  // Number of distinct waypoints each robot has reached so far.
  const std::vector<int>& visited_count() const { return visited_; }

 private:
  WaypointPlan plan_;
  ControllerGains gains_;
  TeamParams params_;
  std::vector<int> current_;
  std::vector<int> visited_;
};

// Stateless PD law (no waypoint advancement) used by the controller and tests.
Eigen::VectorXd nominal_control(const EnsembleState& x, const std::vector<Vec2>& targets,
                                const ControllerGains& gains, const TeamParams& params);

// Minimally invasive barrier filter: corrects a nominal control just enough
// to keep it inside the admissible set of the composite barrier.
class SafetyFilter {
 public:
  struct Result {
    Eigen::VectorXd u;
    QpSolution qp;
    LinearControlConstraint constraint;
    bool emergency_stop = false;  // QP infeasible; braking fallback applied
  };

  SafetyFilter(BarrierTree tree, ClassKappa alpha, TeamParams params, double brake_gain);

  // Solves min ||u - uhat||^2 s.t. the tree's constraint at x and the
  // +-max_accel box. Throws InvarianceViolation if x is outside the set.
  Result apply(const EnsembleState& x, const Eigen::VectorXd& uhat);

  const BarrierTree& tree() const { return tree_; }

 private:
  BarrierTree tree_;
  ClassKappa alpha_;
  TeamParams params_;
  double brake_gain_;
  QpSolver solver_;
};

// Per-coordinate braking command -brake_gain * v, clamped to +-max_accel.
Eigen::VectorXd emergency_brake(const EnsembleState& x, double brake_gain,
                                const TeamParams& params);

}  // namespace cbf
