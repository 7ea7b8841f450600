#pragma once

#include <string>
#include <utility>

#include "cbf/barrier.hpp"
#include "cbf/ensemble.hpp"

namespace cbf {

// Sqrt arguments in (-kDomainTol, 0) are clamped to 0; below that the zero
// piece is selected (raw value -inf).
inline constexpr double kDomainTol = 1e-12;

struct TeamParams {
  int n = 2;              // robot count
  double max_accel = 2.0;  // per-robot acceleration bound [m/s^2]
  double max_speed = 0.4;  // beta, per-robot speed bound [m/s]
  double d_s = 0.15;       // safety distance [m]
  double d_c = 0.6;        // connectivity distance [m]

  void validate() const;
};

// Pairwise collision-avoidance margin under worst-case braking:
//   h_ij = 2 sqrt(max_accel (|dp| - d_s)) + dp.dv / |dp|,  dp = p_i - p_j.
// Returns (h, dh/d(p,v)); h = -inf when |dp| < d_s (outside the sqrt domain).
std::pair<double, Eigen::VectorXd> safety_h(const EnsembleState& x, int i, int j,
                                            const TeamParams& params);

// Pairwise connectivity margin under worst-case fleeing acceleration:
//   hbar_ij = 2 sqrt(max_accel (d_c - |dp|)) - dp.dv / |dp|.
// Returns (h, gradient); h = -inf when |dp| > d_c.
std::pair<double, Eigen::VectorXd> connectivity_h(const EnsembleState& x, int i, int j,
                                                  const TeamParams& params);

class SafetyPairAtom : public BarrierAtom {
 public:
  SafetyPairAtom(int i, int j, TeamParams params);
  std::string label() const override;
  double raw_value(const EnsembleState& x) const override;
  Eigen::VectorXd gradient(const EnsembleState& x) const override;
  double drift_term(const EnsembleState& x) const override;
  Eigen::VectorXd control_row(const EnsembleState& x) const override;
  int i() const { return i_; }
  int j() const { return j_; }

 private:
  int i_, j_;  // 0-based, i_ < j_
  TeamParams params_;
};

class ConnectivityPairAtom : public BarrierAtom {
 public:
  ConnectivityPairAtom(int i, int j, TeamParams params);
  std::string label() const override;
  double raw_value(const EnsembleState& x) const override;
  Eigen::VectorXd gradient(const EnsembleState& x) const override;
  double drift_term(const EnsembleState& x) const override;
  Eigen::VectorXd control_row(const EnsembleState& x) const override;
  int i() const { return i_; }
  int j() const { return j_; }

 private:
  int i_, j_;
  TeamParams params_;
};

}  // namespace cbf
