#include "cbf/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cbf {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string trajectory_csv(const TrajectoryLog& log) {
  const int n = log.n;
  std::ostringstream out;

  out << "t";
  for (int i = 1; i <= n; ++i) out << ",p" << i << "x,p" << i << "y";
  for (int i = 1; i <= n; ++i) out << ",v" << i << "x,v" << i << "y";
  for (int i = 1; i <= n; ++i) out << ",uhat" << i << "x,uhat" << i << "y";
  for (int i = 1; i <= n; ++i) out << ",u" << i << "x,u" << i << "y";
  out << ",log_b";
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) out << ",d_" << i << "_" << j;
  out << ",qp_status,qp_iterations,active_branches\n";

  for (const auto& rec : log.records) {
    out << fmt9(rec.t);
    for (int i = 0; i < n; ++i)
      out << ',' << fmt9(rec.state.p(i, 0)) << ',' << fmt9(rec.state.p(i, 1));
    for (int i = 0; i < n; ++i)
      out << ',' << fmt9(rec.state.v(i, 0)) << ',' << fmt9(rec.state.v(i, 1));
    for (int i = 0; i < 2 * n; i += 2)
      out << ',' << fmt9(rec.nominal[i]) << ',' << fmt9(rec.nominal[i + 1]);
    for (int i = 0; i < 2 * n; i += 2)
      out << ',' << fmt9(rec.applied[i]) << ',' << fmt9(rec.applied[i + 1]);
    out << ',' << fmt9(rec.log_b);
    for (double d : rec.pair_distances) out << ',' << fmt9(d);
    out << ',' << rec.qp_status << ',' << rec.qp_iterations << ',';
    if (rec.active_branches.empty()) {
      out << '-';
    } else {
      for (size_t k = 0; k < rec.active_branches.size(); ++k)
        out << (k ? "|" : "") << rec.active_branches[k];
    }
    out << '\n';
  }
  return out.str();
}

namespace {

const char* status_name(PropertyResult::Status s) {
  switch (s) {
    case PropertyResult::Status::Pass: return "pass";
    case PropertyResult::Status::Fail: return "fail";
    case PropertyResult::Status::NotApplicable: return "not_applicable";
  }
  return "?";
}

}  // namespace

std::string summary_text(const Scenario& scenario, const TrajectoryLog& log,
                         const SummaryMetrics& m) {
  const SimConfig& cfg = scenario.config;
  std::ostringstream out;
  out << "schema_version 1\n";
  out << "scenario " << scenario.name << "\n";
  out << "n " << cfg.params.n << "\n";
  out << "dt " << fmt9(cfg.dt) << "\n";
  out << "duration " << fmt9(cfg.duration) << "\n";
  out << "steps " << cfg.steps() << "\n";
  out << "records " << log.records.size() << "\n";
  out << "d_s " << fmt9(cfg.params.d_s) << "\n";
  out << "d_c " << fmt9(cfg.params.d_c) << "\n";
  out << "min_pair_distance " << fmt9(m.min_pair_distance) << "\n";
  out << "max_speed " << fmt9(m.max_speed) << "\n";
  out << "min_log_b " << fmt9(m.min_log_b) << "\n";
  for (size_t i = 0; i < m.waypoints_visited.size(); ++i)
    out << "waypoints_visited_" << (i + 1) << " " << m.waypoints_visited[i] << "/"
        << cfg.plan.per_robot[i].size() << "\n";
  for (const auto& [pair, dist] : m.required_edge_max_distance)
    out << "required_edge_" << (pair.first + 1) << "_" << (pair.second + 1)
        << "_max_distance " << fmt9(dist) << "\n";
  for (size_t g = 0; g < m.or_group_worst_distance.size(); ++g)
    out << "or_group_" << (g + 1) << "_worst_distance " << fmt9(m.or_group_worst_distance[g])
        << "\n";
  if (!m.satisfied_graph.empty()) {
    out << "graph_switches " << m.graph_switches << "\n";
    out << "satisfied_graph_first " << (m.satisfied_graph.front() + 1) << "\n";
    out << "satisfied_graph_last " << (m.satisfied_graph.back() + 1) << "\n";
  }
  for (const auto& p : m.properties)
    out << "property_" << p.name << " " << status_name(p.status) << "\n";
  return out.str();
}

std::string report_text(const Scenario& scenario, const SummaryMetrics& m) {
  std::ostringstream out;
  out << "scenario " << scenario.name << "\n";
  for (const auto& p : m.properties) {
    const char* tag = p.status == PropertyResult::Status::Pass
                          ? "PASS"
                          : (p.status == PropertyResult::Status::Fail ? "FAIL" : " N/A");
    out << "  [" << tag << "] " << p.name << ": " << p.detail << "\n";
  }
  out << "  waypoints visited:";
  for (size_t i = 0; i < m.waypoints_visited.size(); ++i)
    out << ' ' << m.waypoints_visited[i] << '/' << scenario.config.plan.per_robot[i].size();
  out << "\n";
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

}  // namespace cbf
