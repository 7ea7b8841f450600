#include "cbf/atoms.hpp"

#include <cmath>
#include <limits>

namespace cbf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCoincidentTol = 1e-12;

struct PairGeometry {
  Vec2 dp, dv;
  double dist;
  double radial;  // dp.dv / dist
};

PairGeometry pair_geometry(const EnsembleState& x, int i, int j) {
  if (i == j) throw InputError("pairwise barrier: i and j must differ");
  PairGeometry g;
  g.dp = position_of(x, i) - position_of(x, j);
  g.dv = velocity_of(x, i) - velocity_of(x, j);
  g.dist = g.dp.norm();
  if (g.dist < kCoincidentTol)
    throw DegenerateStateError("pairwise barrier: robots " + std::to_string(i + 1) + " and " +
                               std::to_string(j + 1) + " are coincident");
  g.radial = g.dp.dot(g.dv) / g.dist;
  return g;
}

// Scatters d/d(dp), d/d(dv) into the 4N ensemble gradient (+ at robot i, - at j).
Eigen::VectorXd scatter_pair_gradient(int n, int i, int j, const Vec2& d_dp, const Vec2& d_dv) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(4 * n);
  grad.segment<2>(2 * i) = d_dp;
  grad.segment<2>(2 * j) = -d_dp;
  grad.segment<2>(2 * n + 2 * i) = d_dv;
  grad.segment<2>(2 * n + 2 * j) = -d_dv;
  return grad;
}

Eigen::VectorXd scatter_pair_row(int n, int i, int j, const Vec2& d_dv) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(2 * n);
  row.segment<2>(2 * i) = d_dv;
  row.segment<2>(2 * j) = -d_dv;
  return row;
}

}  // namespace

void TeamParams::validate() const {
  if (n < 2) throw InputError("TeamParams: need at least two robots");
  if (!(max_accel > 0.0)) throw InputError("TeamParams: max_accel must be positive");
  if (!(max_speed > 0.0)) throw InputError("TeamParams: max_speed must be positive");
  if (!(d_s > 0.0 && d_s < d_c)) throw InputError("TeamParams: requires 0 < d_s < d_c");
}

std::pair<double, Eigen::VectorXd> safety_h(const EnsembleState& x, int i, int j,
                                            const TeamParams& params) {
  const PairGeometry g = pair_geometry(x, i, j);
  const int n = x.count();
  double arg = params.max_accel * (g.dist - params.d_s);
  if (arg < -kDomainTol)
    return {kNegInf, Eigen::VectorXd::Zero(4 * n)};
  if (arg < 0.0) arg = 0.0;

  const double sq = std::sqrt(arg);
  const double h = 2.0 * sq + g.radial;

  const Vec2 unit = g.dp / g.dist;
  Vec2 d_dp = g.dv / g.dist - g.radial * g.dp / (g.dist * g.dist);
  if (sq > 0.0) d_dp += (params.max_accel / sq) * unit;
  const Vec2 d_dv = unit;
  return {h, scatter_pair_gradient(n, i, j, d_dp, d_dv)};
}

std::pair<double, Eigen::VectorXd> connectivity_h(const EnsembleState& x, int i, int j,
                                                  const TeamParams& params) {
  const PairGeometry g = pair_geometry(x, i, j);
  const int n = x.count();
  double arg = params.max_accel * (params.d_c - g.dist);
  if (arg < -kDomainTol)
    return {kNegInf, Eigen::VectorXd::Zero(4 * n)};
  if (arg < 0.0) arg = 0.0;

  const double sq = std::sqrt(arg);
  const double h = 2.0 * sq - g.radial;

  const Vec2 unit = g.dp / g.dist;
  Vec2 d_dp = -(g.dv / g.dist - g.radial * g.dp / (g.dist * g.dist));
  if (sq > 0.0) d_dp -= (params.max_accel / sq) * unit;
  const Vec2 d_dv = -unit;
  return {h, scatter_pair_gradient(n, i, j, d_dp, d_dv)};
}

SafetyPairAtom::SafetyPairAtom(int i, int j, TeamParams params)
    : i_(std::min(i, j)), j_(std::max(i, j)), params_(params) {
  if (i == j) throw InputError("SafetyPairAtom: i and j must differ");
}

std::string SafetyPairAtom::label() const {
  return "safety_" + std::to_string(i_ + 1) + "_" + std::to_string(j_ + 1);
}

double SafetyPairAtom::raw_value(const EnsembleState& x) const {
  return safety_h(x, i_, j_, params_).first;
}

Eigen::VectorXd SafetyPairAtom::gradient(const EnsembleState& x) const {
  return safety_h(x, i_, j_, params_).second;
}

double SafetyPairAtom::drift_term(const EnsembleState& x) const {
  const auto [h, grad] = safety_h(x, i_, j_, params_);
  (void)h;
  const int n = x.count();
  double drift = 0.0;
  for (int k = 0; k < n; ++k) drift += grad.segment<2>(2 * k).dot(velocity_of(x, k));
  return drift;
}

Eigen::VectorXd SafetyPairAtom::control_row(const EnsembleState& x) const {
  const Vec2 dp = position_of(x, i_) - position_of(x, j_);
  const double dist = dp.norm();
  if (dist < kCoincidentTol)
    throw DegenerateStateError("SafetyPairAtom: coincident robots");
  return scatter_pair_row(x.count(), i_, j_, Vec2(dp / dist));
}

ConnectivityPairAtom::ConnectivityPairAtom(int i, int j, TeamParams params)
    : i_(std::min(i, j)), j_(std::max(i, j)), params_(params) {
  if (i == j) throw InputError("ConnectivityPairAtom: i and j must differ");
}

std::string ConnectivityPairAtom::label() const {
  return "conn_" + std::to_string(i_ + 1) + "_" + std::to_string(j_ + 1);
}

double ConnectivityPairAtom::raw_value(const EnsembleState& x) const {
  return connectivity_h(x, i_, j_, params_).first;
}

Eigen::VectorXd ConnectivityPairAtom::gradient(const EnsembleState& x) const {
  return connectivity_h(x, i_, j_, params_).second;
}

double ConnectivityPairAtom::drift_term(const EnsembleState& x) const {
  const auto [h, grad] = connectivity_h(x, i_, j_, params_);
  (void)h;
  const int n = x.count();
  double drift = 0.0;
  for (int k = 0; k < n; ++k) drift += grad.segment<2>(2 * k).dot(velocity_of(x, k));
  return drift;
}

Eigen::VectorXd ConnectivityPairAtom::control_row(const EnsembleState& x) const {
  const Vec2 dp = position_of(x, i_) - position_of(x, j_);
  const double dist = dp.norm();
  if (dist < kCoincidentTol)
    throw DegenerateStateError("ConnectivityPairAtom: coincident robots");
  return scatter_pair_row(x.count(), i_, j_, Vec2(-dp / dist));
}

}  // namespace cbf
