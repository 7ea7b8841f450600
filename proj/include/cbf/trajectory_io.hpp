#pragma once

#include <string>

#include "cbf/scenario.hpp"
#include "cbf/sim.hpp"

namespace cbf {

// All numbers in emitted files use 9 significant digits ("%.9g").
std::string fmt9(double v);

// Comma-separated trajectory table, one row per logged step. Column order:
//   t,
//   p<i>x, p<i>y            for i = 1..N
//   v<i>x, v<i>y            for i = 1..N
//   uhat<i>x, uhat<i>y      for i = 1..N
//   u<i>x, u<i>y            for i = 1..N
//   log_b,
//   d_<i>_<j>               for i < j, lexicographic
//   qp_status, qp_iterations, active_branches
// active_branches joins one decimal mask per Sum node with '|' ("-" if none).
std::string trajectory_csv(const TrajectoryLog& log);

// Key-value summary document (versioned, one "key value" pair per line).
std::string summary_text(const Scenario& scenario, const TrajectoryLog& log,
                         const SummaryMetrics& m);

// Human-readable pass/fail report printed by the CLI.
std::string report_text(const Scenario& scenario, const SummaryMetrics& m);

void write_file(const std::string& path, const std::string& content);

}  // namespace cbf
