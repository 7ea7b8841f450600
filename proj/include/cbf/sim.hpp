#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbf/certificates.hpp"
#include "cbf/controller.hpp"
#include "cbf/ensemble.hpp"

namespace cbf {

// Initial states must clear every required atom by this margin.
inline constexpr double kInitMargin = 1e-6;

struct SimConfig {
  double dt = 0.02;      // [s]
  double duration = 10;  // [s]
  std::uint64_t seed = 0;
  TeamParams params;
  WaypointPlan plan;
  CertificateSpec certificate;
  ClassKappa alpha;
  ControllerGains gains;
  EnsembleState initial;

  void validate() const;
  int steps() const;  // floor(duration/dt)
};

struct StepRecord {
  double t = 0.0;
  EnsembleState state;
  Eigen::VectorXd nominal;   // uhat
  Eigen::VectorXd applied;   // u*
  double log_b = 0.0;        // composite barrier value, log domain; NaN without one
  std::vector<double> pair_distances;  // (i,j), j > i, lexicographic
  std::string qp_status;     // optimal | infeasible | iteration_limit | none | breach
  int qp_iterations = 0;
  std::vector<std::uint64_t> active_branches;  // per Sum node, pre-order
};

struct TrajectoryLog {
  int n = 0;
  double dt = 0.0;
  std::vector<StepRecord> records;  // steps+1 entries; records[k].t == k*dt
};

// Exact zero-order-hold step of the double integrator followed by the
// per-robot speed clamp to max_speed.
EnsembleState step(const EnsembleState& x, const Eigen::VectorXd& u, double dt,
                   const TeamParams& params);

// Runs nominal control -> barrier filter -> step for floor(duration/dt)
// steps, logging every state (including the initial and final ones). Fully
// deterministic for a given config. Throws ConfigError when the initial state
// violates the configured certificate.
TrajectoryLog run(const SimConfig& config);

struct PropertyResult {
  std::string name;
  enum class Status { Pass, Fail, NotApplicable } status;
  std::string detail;
};

struct SummaryMetrics {
  double min_pair_distance = 0.0;  // over all steps and pairs
  double max_speed = 0.0;
  double min_log_b = 0.0;          // NaN when no certificate
  bool invariance_held = false;    // composite B > 0 at every step
  std::vector<int> waypoints_visited;  // per robot
  int total_waypoints = 0;
  // static certificates: max over time of each required edge distance
  std::vector<std::pair<std::pair<int, int>, double>> required_edge_max_distance;
  // static certificates: per OR-group, max over time of the group's min edge distance
  std::vector<double> or_group_worst_distance;
  // dynamic certificates: per step, lowest-index allowable graph with all
  // edges within d_c (-1 when none), plus the number of index changes
  std::vector<int> satisfied_graph;
  int graph_switches = 0;
  std::vector<PropertyResult> properties;

  bool all_passed() const;
};

SummaryMetrics metrics(const TrajectoryLog& log, const SimConfig& config);

int pair_count(int n);
int pair_slot(int n, int i, int j);  // lexicographic index of (i,j), i < j

}  // namespace cbf
