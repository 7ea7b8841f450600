#include "cbf/controller.hpp"

#include <algorithm>
#include <cmath>

namespace cbf {

void ControllerGains::validate() const {
  if (!(k_p > 0.0) || !(k_d > 0.0)) throw InputError("ControllerGains: gains must be positive");
}

void WaypointPlan::validate(int n) const {
  if (static_cast<int>(per_robot.size()) != n)
    throw InputError("WaypointPlan: need a waypoint list per robot");
  for (const auto& list : per_robot)
    if (list.empty()) throw InputError("WaypointPlan: every robot needs at least one waypoint");
  if (!(arrival_radius > 0.0)) throw InputError("WaypointPlan: arrival radius must be positive");
}

int WaypointPlan::total_waypoints() const {
  int total = 0;
  for (const auto& list : per_robot) total += static_cast<int>(list.size());
  return total;
}

Eigen::VectorXd nominal_control(const EnsembleState& x, const std::vector<Vec2>& targets,
                                const ControllerGains& gains, const TeamParams& params) {
  const int n = x.count();
  if (static_cast<int>(targets.size()) != n)
    throw InputError("nominal_control: one target per robot required");
  Eigen::VectorXd u(2 * n);
  for (int i = 0; i < n; ++i) {
    const Vec2 raw =
        -gains.k_p * (position_of(x, i) - targets[i]) - gains.k_d * velocity_of(x, i);
    u[2 * i] = std::clamp(raw.x(), -params.max_accel, params.max_accel);
    u[2 * i + 1] = std::clamp(raw.y(), -params.max_accel, params.max_accel);
  }
  return u;
}

WaypointController::WaypointController(WaypointPlan plan, ControllerGains gains,
                                       TeamParams params)
    : plan_(std::move(plan)), gains_(gains), params_(params) {
  params_.validate();
  gains_.validate();
  plan_.validate(params_.n);
  current_.assign(params_.n, 0);
  visited_.assign(params_.n, 0);
}

Eigen::VectorXd WaypointController::control(const EnsembleState& x) {
  const int n = params_.n;
  if (x.count() != n) throw InputError("WaypointController: state has wrong robot count");
  std::vector<Vec2> targets(n);
  for (int i = 0; i < n; ++i) {
    const auto& list = plan_.per_robot[i];
    const int last = static_cast<int>(list.size()) - 1;
    // advance through any stacked waypoints already within reach
    while ((position_of(x, i) - list[current_[i]]).norm() <= plan_.arrival_radius) {
      visited_[i] = std::max(visited_[i], current_[i] + 1);
      if (current_[i] == last) break;
      ++current_[i];
    }
    targets[i] = list[current_[i]];
  }
  Eigen::VectorXd u = nominal_control(x, targets, gains_, params_);
  if (!plan_.hold_at_final) {
    // after the final arrival, damp velocity instead of pulling at the goal
    for (int i = 0; i < n; ++i) {
      if (visited_[i] == static_cast<int>(plan_.per_robot[i].size())) {
        const Vec2 damp = -gains_.k_d * velocity_of(x, i);
        u[2 * i] = std::clamp(damp.x(), -params_.max_accel, params_.max_accel);
        u[2 * i + 1] = std::clamp(damp.y(), -params_.max_accel, params_.max_accel);
      }
    }
  }
  return u;
}

Eigen::VectorXd emergency_brake(const EnsembleState& x, double brake_gain,
                                const TeamParams& params) {
  const int n = x.count();
  Eigen::VectorXd u(2 * n);
  for (int i = 0; i < n; ++i) {
    const Vec2 raw = -brake_gain * velocity_of(x, i);
    u[2 * i] = std::clamp(raw.x(), -params.max_accel, params.max_accel);
    u[2 * i + 1] = std::clamp(raw.y(), -params.max_accel, params.max_accel);
  }
  return u;
}

SafetyFilter::SafetyFilter(BarrierTree tree, ClassKappa alpha, TeamParams params,
                           double brake_gain)
    : tree_(std::move(tree)), alpha_(alpha), params_(params), brake_gain_(brake_gain) {
  params_.validate();
  alpha_.validate();
}

SafetyFilter::Result SafetyFilter::apply(const EnsembleState& x, const Eigen::VectorXd& uhat) {
  if (uhat.size() != x.control_dim())
    throw InputError("SafetyFilter: nominal control has wrong dimension");

  Result res;
  res.constraint = eval_constraint(tree_, x, alpha_);

  QpProblem problem = QpProblem::boxed(uhat, params_.max_accel);
  problem.inequalities.emplace_back(res.constraint.coeff, res.constraint.offset);
  res.qp = solver_.solve(problem);

  if (res.qp.status == QpStatus::Infeasible) {
    res.emergency_stop = true;
    res.u = emergency_brake(x, brake_gain_, params_);
  } else {
    res.u = res.qp.u;  // iteration-limit keeps the best iterate
  }
  return res;
}

}  // namespace cbf
