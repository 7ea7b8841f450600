#pragma once

#include <string>

#include "cbf/sim.hpp"

namespace cbf {

struct Scenario {
  std::string name;
  SimConfig config;
};

// Strict JSON scenario schema; unknown keys and inconsistent lengths are
// rejected with a ParseError naming the offending field. Robot indices in the
// file are 1-based.
Scenario parse_scenario_text(const std::string& text, const std::string& source_name);
Scenario load_scenario(const std::string& path);

// Inverse of parsing; parse(serialize(s)) is semantically identical to s.
std::string serialize_scenario(const Scenario& scenario);

// Sampling arena for validity audits: bounding box of the initial positions
// and all waypoints, inflated by d_c on every side.
std::pair<Vec2, Vec2> scenario_arena(const SimConfig& config);

}  // namespace cbf
