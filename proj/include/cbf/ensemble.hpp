#pragma once

#include <Eigen/Dense>

namespace cbf {

using Vec2 = Eigen::Vector2d;

// Stacked planar state of a team of N double integrators.
//
// Vector layouts used throughout:
//   control u      : 2N, robot i occupies coordinates (2i, 2i+1)
//   state direction: 4N, positions first then velocities,
//                    d/dp_i at (2i, 2i+1), d/dv_i at (2N+2i, 2N+2i+1)
struct EnsembleState {
  Eigen::MatrixX2d p;  // positions [m], one row per robot
  Eigen::MatrixX2d v;  // velocities [m/s]
  double t = 0.0;      // [s]

  int count() const { return static_cast<int>(p.rows()); }
  int control_dim() const { return 2 * count(); }
  int state_dim() const { return 4 * count(); }

  bool finite() const { return p.allFinite() && v.allFinite(); }

  static EnsembleState zero(int n) {
    EnsembleState x;
    x.p = Eigen::MatrixX2d::Zero(n, 2);
    x.v = Eigen::MatrixX2d::Zero(n, 2);
    return x;
  }

  // Applies a state-space displacement dt*q, q laid out as above.
  EnsembleState displaced(const Eigen::VectorXd& q, double scale) const {
    EnsembleState out = *this;
    const int n = count();
    for (int i = 0; i < n; ++i) {
      out.p.row(i) += scale * q.segment<2>(2 * i).transpose();
      out.v.row(i) += scale * q.segment<2>(2 * n + 2 * i).transpose();
    }
    return out;
  }
};

inline Vec2 position_of(const EnsembleState& x, int i) { return x.p.row(i).transpose(); }
inline Vec2 velocity_of(const EnsembleState& x, int i) { return x.v.row(i).transpose(); }

// Double-integrator drift direction f(x) = (v, 0) stacked as a 4N state vector.
inline Eigen::VectorXd drift_direction(const EnsembleState& x) {
  const int n = x.count();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(4 * n);
  for (int i = 0; i < n; ++i) f.segment<2>(2 * i) = x.v.row(i).transpose();
  return f;
}

// Closed-loop direction f(x) + g(x)u = (v, u) as a 4N state vector.
inline Eigen::VectorXd closed_loop_direction(const EnsembleState& x, const Eigen::VectorXd& u) {
  const int n = x.count();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(4 * n);
  for (int i = 0; i < n; ++i) {
    q.segment<2>(2 * i) = x.v.row(i).transpose();
    q.segment<2>(2 * n + 2 * i) = u.segment<2>(2 * i);
  }
  return q;
}

}  // namespace cbf
