#include "cbf/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cbf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError("scenario: " + where + ": " + what);
}

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

const json& require(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) fail(where, "missing key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

Vec2 vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [x, y]");
  return Vec2(number(j[0], where + "[0]"), number(j[1], where + "[1]"));
}

std::pair<int, int> edge(const json& j, const std::string& where, int n) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [i, j]");
  const int i = integer(j[0], where + "[0]");
  const int k = integer(j[1], where + "[1]");
  if (i < 1 || i > n || k < 1 || k > n) fail(where, "robot index out of range 1..n");
  if (i == k) fail(where, "self-loop edge");
  return {std::min(i, k) - 1, std::max(i, k) - 1};
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("scenario: " + source_name + ": " + e.what());
  }

  require_keys(j, source_name,
               {"name", "team", "initial", "waypoints", "certificate", "alpha", "gains", "sim"});

  Scenario sc;
  sc.name = j.contains("name") ? j.at("name").get<std::string>() : source_name;
  SimConfig& cfg = sc.config;

  {
    const json& team = require(j, source_name, "team");
    require_keys(team, "team", {"n", "max_accel", "max_speed", "d_s", "d_c"});
    cfg.params.n = integer(require(team, "team", "n"), "team.n");
    cfg.params.max_accel = number(require(team, "team", "max_accel"), "team.max_accel");
    cfg.params.max_speed = number(require(team, "team", "max_speed"), "team.max_speed");
    cfg.params.d_s = number(require(team, "team", "d_s"), "team.d_s");
    cfg.params.d_c = number(require(team, "team", "d_c"), "team.d_c");
  }
  const int n = cfg.params.n;

  {
    const json& init = require(j, source_name, "initial");
    require_keys(init, "initial", {"positions", "velocities"});
    const json& pos = require(init, "initial", "positions");
    const json& vel = require(init, "initial", "velocities");
    if (!pos.is_array() || static_cast<int>(pos.size()) != n)
      fail("initial.positions", "expected n position rows");
    if (!vel.is_array() || static_cast<int>(vel.size()) != n)
      fail("initial.velocities", "expected n velocity rows");
    cfg.initial = EnsembleState::zero(n);
    for (int i = 0; i < n; ++i) {
      cfg.initial.p.row(i) = vec2(pos[i], "initial.positions[" + std::to_string(i) + "]");
      cfg.initial.v.row(i) = vec2(vel[i], "initial.velocities[" + std::to_string(i) + "]");
    }
  }

  {
    const json& wp = require(j, source_name, "waypoints");
    require_keys(wp, "waypoints", {"arrival_radius", "hold_at_final", "per_robot"});
    cfg.plan.arrival_radius =
        number(require(wp, "waypoints", "arrival_radius"), "waypoints.arrival_radius");
    const json& hold = require(wp, "waypoints", "hold_at_final");
    if (!hold.is_boolean()) fail("waypoints.hold_at_final", "expected a boolean");
    cfg.plan.hold_at_final = hold.get<bool>();
    const json& lists = require(wp, "waypoints", "per_robot");
    if (!lists.is_array() || static_cast<int>(lists.size()) != n)
      fail("waypoints.per_robot", "expected one waypoint list per robot");
    cfg.plan.per_robot.clear();
    for (int i = 0; i < n; ++i) {
      const json& list = lists[i];
      const std::string where = "waypoints.per_robot[" + std::to_string(i) + "]";
      if (!list.is_array() || list.empty()) fail(where, "expected a non-empty waypoint list");
      std::vector<Vec2> points;
      for (size_t k = 0; k < list.size(); ++k)
        points.push_back(vec2(list[k], where + "[" + std::to_string(k) + "]"));
      cfg.plan.per_robot.push_back(std::move(points));
    }
  }

  {
    const json& cert = require(j, source_name, "certificate");
    require_keys(cert, "certificate", {"kind", "edges", "or_groups", "graphs"});
    const std::string kind = require(cert, "certificate", "kind").get<std::string>();
    if (kind == "none") {
      cfg.certificate.kind = CertificateSpec::Kind::None;
    } else if (kind == "safety") {
      cfg.certificate.kind = CertificateSpec::Kind::Safety;
    } else if (kind == "static") {
      cfg.certificate.kind = CertificateSpec::Kind::Static;
      cfg.certificate.required.n = n;
      if (cert.contains("edges")) {
        const json& edges = cert.at("edges");
        if (!edges.is_array()) fail("certificate.edges", "expected an edge list");
        for (size_t k = 0; k < edges.size(); ++k)
          cfg.certificate.required.edges.push_back(
              edge(edges[k], "certificate.edges[" + std::to_string(k) + "]", n));
      }
      if (cert.contains("or_groups")) {
        const json& groups = cert.at("or_groups");
        if (!groups.is_array()) fail("certificate.or_groups", "expected a list of groups");
        for (size_t g = 0; g < groups.size(); ++g) {
          const std::string where = "certificate.or_groups[" + std::to_string(g) + "]";
          const json& group = groups[g];
          if (!group.is_array() || group.empty()) fail(where, "expected a non-empty edge list");
          std::vector<std::pair<int, int>> edges;
          for (size_t k = 0; k < group.size(); ++k)
            edges.push_back(edge(group[k], where + "[" + std::to_string(k) + "]", n));
          cfg.certificate.or_groups.push_back(std::move(edges));
        }
      }
    } else if (kind == "dynamic") {
      cfg.certificate.kind = CertificateSpec::Kind::Dynamic;
      const json& graphs = require(cert, "certificate", "graphs");
      if (!graphs.is_array() || graphs.empty())
        fail("certificate.graphs", "expected a non-empty list of graphs");
      for (size_t g = 0; g < graphs.size(); ++g) {
        const std::string where = "certificate.graphs[" + std::to_string(g) + "]";
        const json& glist = graphs[g];
        if (!glist.is_array() || glist.empty()) fail(where, "expected a non-empty edge list");
        ConnectivityGraph graph;
        graph.n = n;
        for (size_t k = 0; k < glist.size(); ++k) {
          const auto [a, b] = edge(glist[k], where + "[" + std::to_string(k) + "]", n);
          graph.edges.push_back({a, b});
        }
        cfg.certificate.allowable.graphs.push_back(std::move(graph));
      }
    } else {
      fail("certificate.kind", "expected none | safety | static | dynamic");
    }
    if (kind != "static" && (cert.contains("edges") || cert.contains("or_groups")))
      fail("certificate", "edges/or_groups only apply to kind 'static'");
    if (kind != "dynamic" && cert.contains("graphs"))
      fail("certificate", "graphs only applies to kind 'dynamic'");
  }

  {
    const json& alpha = require(j, source_name, "alpha");
    require_keys(alpha, "alpha", {"gain", "power"});
    cfg.alpha.gain = number(require(alpha, "alpha", "gain"), "alpha.gain");
    cfg.alpha.power = integer(require(alpha, "alpha", "power"), "alpha.power");
  }
  {
    const json& gains = require(j, source_name, "gains");
    require_keys(gains, "gains", {"k_p", "k_d"});
    cfg.gains.k_p = number(require(gains, "gains", "k_p"), "gains.k_p");
    cfg.gains.k_d = number(require(gains, "gains", "k_d"), "gains.k_d");
  }
  {
    const json& sim = require(j, source_name, "sim");
    require_keys(sim, "sim", {"dt", "duration", "seed"});
    cfg.dt = number(require(sim, "sim", "dt"), "sim.dt");
    cfg.duration = number(require(sim, "sim", "duration"), "sim.duration");
    const json& seed = require(sim, "sim", "seed");
    if (!seed.is_number_integer() || (seed.is_number_integer() && seed.get<double>() < 0))
      fail("sim.seed", "expected a non-negative integer");
    cfg.seed = seed.get<std::uint64_t>();
  }

  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ParseError("scenario: " + source_name + ": " + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

std::pair<Vec2, Vec2> scenario_arena(const SimConfig& config) {
  Vec2 lo = config.initial.p.colwise().minCoeff().transpose();
  Vec2 hi = config.initial.p.colwise().maxCoeff().transpose();
  for (const auto& list : config.plan.per_robot) {
    for (const auto& w : list) {
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
  }
  lo.array() -= config.params.d_c;
  hi.array() += config.params.d_c;
  return {lo, hi};
}

std::string serialize_scenario(const Scenario& scenario) {
  const SimConfig& cfg = scenario.config;
  json j;
  j["name"] = scenario.name;
  j["team"] = {{"n", cfg.params.n},
               {"max_accel", cfg.params.max_accel},
               {"max_speed", cfg.params.max_speed},
               {"d_s", cfg.params.d_s},
               {"d_c", cfg.params.d_c}};
  json pos = json::array(), vel = json::array();
  for (int i = 0; i < cfg.params.n; ++i) {
    pos.push_back({cfg.initial.p(i, 0), cfg.initial.p(i, 1)});
    vel.push_back({cfg.initial.v(i, 0), cfg.initial.v(i, 1)});
  }
  j["initial"] = {{"positions", pos}, {"velocities", vel}};
  json lists = json::array();
  for (const auto& list : cfg.plan.per_robot) {
    json l = json::array();
    for (const auto& w : list) l.push_back({w.x(), w.y()});
    lists.push_back(l);
  }
  j["waypoints"] = {{"arrival_radius", cfg.plan.arrival_radius},
                    {"hold_at_final", cfg.plan.hold_at_final},
                    {"per_robot", lists}};
  json cert;
  switch (cfg.certificate.kind) {
    case CertificateSpec::Kind::None: cert["kind"] = "none"; break;
    case CertificateSpec::Kind::Safety: cert["kind"] = "safety"; break;
    case CertificateSpec::Kind::Static: {
      cert["kind"] = "static";
      json edges = json::array();
      for (const auto& [a, b] : cfg.certificate.required.edges)
        edges.push_back({a + 1, b + 1});
      cert["edges"] = edges;
      json groups = json::array();
      for (const auto& group : cfg.certificate.or_groups) {
        json g = json::array();
        for (const auto& [a, b] : group) g.push_back({a + 1, b + 1});
        groups.push_back(g);
      }
      cert["or_groups"] = groups;
      break;
    }
    case CertificateSpec::Kind::Dynamic: {
      cert["kind"] = "dynamic";
      json graphs = json::array();
      for (const auto& graph : cfg.certificate.allowable.graphs) {
        json g = json::array();
        for (const auto& [a, b] : graph.edges) g.push_back({a + 1, b + 1});
        graphs.push_back(g);
      }
      cert["graphs"] = graphs;
      break;
    }
  }
  j["certificate"] = cert;
  j["alpha"] = {{"gain", cfg.alpha.gain}, {"power", cfg.alpha.power}};
  j["gains"] = {{"k_p", cfg.gains.k_p}, {"k_d", cfg.gains.k_d}};
  j["sim"] = {{"dt", cfg.dt}, {"duration", cfg.duration}, {"seed", cfg.seed}};
  return j.dump(2) + "\n";
}

}  // namespace cbf
