#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>

#include "cbf/barrier.hpp"
#include "cbf/ensemble.hpp"

namespace cbf::test {

// Quadratic test atom h(x) = bias + w.s + q.(s*s), s the 4N state vector.
// Analytic gradient; drift/control rows follow the double-integrator layout.
class PolyAtom : public BarrierAtom {
 public:
  PolyAtom(Eigen::VectorXd w, Eigen::VectorXd q, double bias, int id)
      : w_(std::move(w)), q_(std::move(q)), bias_(bias), id_(id) {}

  std::string label() const override { return "poly_" + std::to_string(id_); }

  double raw_value(const EnsembleState& x) const override {
    const Eigen::VectorXd s = flatten(x);
    return bias_ + w_.dot(s) + q_.dot(s.cwiseProduct(s));
  }
  Eigen::VectorXd gradient(const EnsembleState& x) const override {
    const Eigen::VectorXd s = flatten(x);
    return w_ + 2.0 * q_.cwiseProduct(s);
  }
  double drift_term(const EnsembleState& x) const override {
    const Eigen::VectorXd g = gradient(x);
    double d = 0.0;
    for (int i = 0; i < x.count(); ++i) d += g.segment<2>(2 * i).dot(velocity_of(x, i));
    return d;
  }
  Eigen::VectorXd control_row(const EnsembleState& x) const override {
    return gradient(x).tail(2 * x.count());
  }

  static Eigen::VectorXd flatten(const EnsembleState& x) {
    const int n = x.count();
    Eigen::VectorXd s(4 * n);
    for (int i = 0; i < n; ++i) {
      s.segment<2>(2 * i) = position_of(x, i);
      s.segment<2>(2 * n + 2 * i) = velocity_of(x, i);
    }
    return s;
  }

 private:
  Eigen::VectorXd w_, q_;
  double bias_;
  int id_;
};

inline AtomPtr random_poly_atom(std::mt19937_64& rng, int n, int id, double bias_span = 1.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(4 * n, [&](int) { return unit(rng); });
  Eigen::VectorXd q =
      Eigen::VectorXd::NullaryExpr(4 * n, [&](int) { return 0.3 * unit(rng); });
  return std::make_shared<PolyAtom>(w, q, bias_span * unit(rng), id);
}

inline EnsembleState random_state(std::mt19937_64& rng, int n, double pos_span = 1.0,
                                  double vel_span = 1.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  EnsembleState x = EnsembleState::zero(n);
  for (int i = 0; i < n; ++i) {
    x.p(i, 0) = pos_span * unit(rng);
    x.p(i, 1) = pos_span * unit(rng);
    x.v(i, 0) = vel_span * unit(rng);
    x.v(i, 1) = vel_span * unit(rng);
  }
  return x;
}

inline double rel_err(double got, double want, double floor = 1.0) {
  return std::abs(got - want) / std::max(floor, std::abs(want));
}

inline double vec_rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

// Central finite difference of a scalar state function along direction q.
inline double central_fd(const std::function<double(const EnsembleState&)>& f,
                         const EnsembleState& x, const Eigen::VectorXd& q, double h) {
  return (f(x.displaced(q, h)) - f(x.displaced(q, -h))) / (2.0 * h);
}

// One-sided finite difference (f(x + a q) - f(x)) / a.
inline double one_sided_fd(const std::function<double(const EnsembleState&)>& f,
                           const EnsembleState& x, const Eigen::VectorXd& q, double a) {
  return (f(x.displaced(q, a)) - f(x)) / a;
}

}  // namespace cbf::test
