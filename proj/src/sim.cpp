#include "cbf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace cbf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("sim: dt must be positive");
  if (duration < 0.0) throw ConfigError("sim: duration must be non-negative");
  params.validate();
  gains.validate();
  alpha.validate();
  plan.validate(params.n);
  if (initial.count() != params.n)
    throw ConfigError("sim: initial state robot count does not match the team");
  if (!initial.finite()) throw ConfigError("sim: non-finite initial state");
}

int SimConfig::steps() const { return static_cast<int>(std::floor(duration / dt + 1e-9)); }

int pair_count(int n) { return n * (n - 1) / 2; }

int pair_slot(int n, int i, int j) {
  // lexicographic over (i, j), j > i
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

EnsembleState step(const EnsembleState& x, const Eigen::VectorXd& u, double dt,
                   const TeamParams& params) {
  if (!(dt > 0.0)) throw InputError("step: dt must be positive");
  if (!x.finite() || !u.allFinite()) throw InputError("step: non-finite input");
  if (u.size() != x.control_dim()) throw InputError("step: control has wrong dimension");

  const int n = x.count();
  EnsembleState next = x;
  for (int i = 0; i < n; ++i) {
    const Vec2 ui = u.segment<2>(2 * i);
    next.p.row(i) += dt * x.v.row(i) + (0.5 * dt * dt) * ui.transpose();
    next.v.row(i) += dt * ui.transpose();
    const double speed = next.v.row(i).norm();
    if (speed > params.max_speed) next.v.row(i) *= params.max_speed / speed;
  }
  next.t = x.t + dt;
  return next;
}

namespace {

std::vector<double> pairwise_distances(const EnsembleState& x) {
  const int n = x.count();
  std::vector<double> d;
  d.reserve(pair_count(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      d.push_back((position_of(x, i) - position_of(x, j)).norm());
  return d;
}

// Strictly-inside admission: every atom a Product requires must clear the
// margin; a Sum needs at least one branch strictly inside.
bool strictly_inside(const BarrierTree& tree, const EnsembleState& x, double margin,
                     std::vector<std::string>& violated) {
  switch (tree.kind()) {
    case BarrierTree::Kind::Atom: {
      const bool ok = tree.atom_ref().value(x) > margin;
      if (!ok) violated.push_back(tree.atom_ref().label());
      return ok;
    }
    case BarrierTree::Kind::Product: {
      bool ok = true;
      for (const auto& c : tree.children()) ok = strictly_inside(c, x, margin, violated) && ok;
      return ok;
    }
    case BarrierTree::Kind::Sum: {
      std::vector<std::string> branch_violations;
      for (const auto& c : tree.children())
        if (strictly_inside(c, x, margin, branch_violations)) return true;
      violated.insert(violated.end(), branch_violations.begin(), branch_violations.end());
      return false;
    }
  }
  return false;
}

}  // namespace

TrajectoryLog run(const SimConfig& config) {
  config.validate();
  const std::optional<BarrierTree> tree = build_certificate(config.params, config.certificate);

  EnsembleState x = config.initial;
  x.t = 0.0;

  if (tree) {
    std::vector<std::string> violated;
    if (!strictly_inside(*tree, x, kInitMargin, violated)) {
      std::ostringstream msg;
      msg << "sim: initial state violates the certificate; offending atoms:";
      for (const auto& id : violated) msg << ' ' << id;
      throw ConfigError(msg.str());
    }
  }

  WaypointController controller(config.plan, config.gains, config.params);
  std::optional<SafetyFilter> filter;
  if (tree) filter.emplace(*tree, config.alpha, config.params, config.gains.k_d);

  TrajectoryLog log;
  log.n = config.params.n;
  log.dt = config.dt;
  const int steps = config.steps();
  log.records.reserve(steps + 1);

  for (int k = 0; k <= steps; ++k) {
    StepRecord rec;
    rec.t = k * config.dt;
    x.t = rec.t;
    rec.state = x;
    rec.pair_distances = pairwise_distances(x);

    rec.nominal = controller.control(x);
    if (filter) {
      const BarrierEvaluation eval = eval_value(*tree, x);
      rec.log_b = eval.log_value;
      rec.active_branches = eval.active_branch_mask;
      if (eval.log_value == kNegInf) {
        // numerical invariance breach: brake and flag the step
        rec.applied = emergency_brake(x, config.gains.k_d, config.params);
        rec.qp_status = "breach";
      } else {
        try {
          const SafetyFilter::Result res = filter->apply(x, rec.nominal);
          rec.applied = res.u;
          rec.qp_status = res.emergency_stop ? "infeasible" : to_string(res.qp.status);
          rec.qp_iterations = res.qp.iterations;
        } catch (const InvarianceViolation&) {
          rec.applied = emergency_brake(x, config.gains.k_d, config.params);
          rec.qp_status = "breach";
        }
      }
    } else {
      rec.log_b = std::numeric_limits<double>::quiet_NaN();
      rec.applied = rec.nominal;
      rec.qp_status = "none";
    }

    log.records.push_back(std::move(rec));
    if (k < steps) x = step(x, log.records.back().applied, config.dt, config.params);
  }
  return log;
}

namespace {

std::string fmt_pair(int i, int j) {
  return std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

}  // namespace

bool SummaryMetrics::all_passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) {
    return p.status != PropertyResult::Status::Fail;
  });
}

SummaryMetrics metrics(const TrajectoryLog& log, const SimConfig& config) {
  if (log.records.empty()) throw InputError("metrics: empty trajectory log");
  const int n = log.n;
  SummaryMetrics m;
  m.total_waypoints = config.plan.total_waypoints();

  m.min_pair_distance = std::numeric_limits<double>::infinity();
  m.min_log_b = std::numeric_limits<double>::infinity();
  for (const auto& rec : log.records) {
    for (double d : rec.pair_distances) m.min_pair_distance = std::min(m.min_pair_distance, d);
    for (int i = 0; i < n; ++i)
      m.max_speed = std::max(m.max_speed, velocity_of(rec.state, i).norm());
    m.min_log_b = std::min(m.min_log_b, rec.log_b);
  }

  const bool certified = config.certificate.kind != CertificateSpec::Kind::None;
  m.invariance_held = certified && m.min_log_b > kNegInf && !std::isnan(m.min_log_b);
  if (!certified) m.min_log_b = std::numeric_limits<double>::quiet_NaN();

  // waypoint visitation: replay the controller's advancement rule on the log
  m.waypoints_visited.assign(n, 0);
  {
    std::vector<int> current(n, 0);
    for (const auto& rec : log.records) {
      for (int i = 0; i < n; ++i) {
        const auto& list = config.plan.per_robot[i];
        const int last = static_cast<int>(list.size()) - 1;
        while ((position_of(rec.state, i) - list[current[i]]).norm() <=
               config.plan.arrival_radius) {
          m.waypoints_visited[i] = std::max(m.waypoints_visited[i], current[i] + 1);
          if (current[i] == last) break;
          ++current[i];
        }
      }
    }
  }

  auto& props = m.properties;
  const auto add = [&](const std::string& name, PropertyResult::Status st,
                       const std::string& detail) {
    props.push_back({name, st, detail});
  };
  const auto pass_fail = [](bool ok) {
    return ok ? PropertyResult::Status::Pass : PropertyResult::Status::Fail;
  };

  {
    std::ostringstream d;
    d << std::setprecision(9) << "min pairwise distance " << m.min_pair_distance << " vs d_s " << config.params.d_s;
    add("safety", pass_fail(m.min_pair_distance >= config.params.d_s), d.str());
  }
  {
    const double bound = config.params.max_speed * (1.0 + 1e-12);
    std::ostringstream d;
    d << std::setprecision(9) << "max speed " << m.max_speed << " vs beta " << config.params.max_speed;
    add("speed_bound", pass_fail(m.max_speed <= bound), d.str());
  }
  if (certified) {
    add("forward_invariance", pass_fail(m.invariance_held),
        m.invariance_held ? "composite B positive at every step" : "composite B reached zero");
  } else {
    add("forward_invariance", PropertyResult::Status::NotApplicable, "no certificate");
  }

  const auto& cert = config.certificate;
  if (cert.kind == CertificateSpec::Kind::Static) {
    for (const auto& [i, j] : cert.required.edges) {
      double worst = 0.0;
      for (const auto& rec : log.records)
        worst = std::max(worst, rec.pair_distances[pair_slot(n, i, j)]);
      m.required_edge_max_distance.push_back({{i, j}, worst});
      std::ostringstream d;
      d << std::setprecision(9) << "max distance " << worst << " vs d_c " << config.params.d_c;
      add("required_edge_" + fmt_pair(i, j), pass_fail(worst < config.params.d_c), d.str());
    }
    int group_id = 0;
    for (const auto& group : cert.or_groups) {
      double worst = 0.0;
      for (const auto& rec : log.records) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [i, j] : group)
          best = std::min(best, rec.pair_distances[pair_slot(n, i, j)]);
        worst = std::max(worst, best);
      }
      m.or_group_worst_distance.push_back(worst);
      std::ostringstream d;
      d << std::setprecision(9) << "max over time of group min distance " << worst << " vs d_c " << config.params.d_c;
      add("or_group_" + std::to_string(++group_id), pass_fail(worst < config.params.d_c),
          d.str());
    }
  }
  if (cert.kind == CertificateSpec::Kind::Dynamic) {
    m.satisfied_graph.reserve(log.records.size());
    bool always_connected = true;
    int previous = std::numeric_limits<int>::min();
    for (const auto& rec : log.records) {
      int satisfied = -1;
      for (size_t g = 0; g < cert.allowable.graphs.size() && satisfied < 0; ++g) {
        bool ok = true;
        for (const auto& [i, j] : cert.allowable.graphs[g].edges)
          ok = ok && rec.pair_distances[pair_slot(n, i, j)] < config.params.d_c;
        if (ok) satisfied = static_cast<int>(g);
      }
      m.satisfied_graph.push_back(satisfied);
      always_connected = always_connected && satisfied >= 0;
      if (previous != std::numeric_limits<int>::min() && satisfied != previous)
        ++m.graph_switches;
      previous = satisfied;
    }
    {
      std::ostringstream d;
      d << (always_connected ? "an allowable graph is satisfied at every step"
                             : "some step satisfies no allowable graph");
      add("dynamic_connectivity", pass_fail(always_connected), d.str());
    }
  }

  return m;
}

}  // namespace cbf
