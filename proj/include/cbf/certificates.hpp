#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cbf/atoms.hpp"
#include "cbf/barrier.hpp"

namespace cbf {

// Undirected required-edge set over robots 0..n-1.
struct ConnectivityGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // each with first < second

  void add_edge(int i, int j);
  void validate() const;
};

// Ordered list of allowable graphs over the same vertex set; the team must
// satisfy at least one of them at all times.
struct AllowableGraphSet {
  std::vector<ConnectivityGraph> graphs;
  void validate() const;
};

// Product over all n(n-1)/2 pairwise safety atoms.
BarrierTree build_safety_certificate(const TeamParams& params);

// Product of all safety atoms and one connectivity atom per required edge.
BarrierTree build_static_certificate(const TeamParams& params, const ConnectivityGraph& graph);

// Product(all safety atoms, Sum_k Product over edges of graph k).
BarrierTree build_dynamic_certificate(const TeamParams& params, const AllowableGraphSet& graphs);

// What a scenario asks the filter to enforce. "Static" supports the paper's
// hand-built shapes: required edges (AND) plus OR-groups, each group a Sum of
// single-edge connectivity atoms.
struct CertificateSpec {
  enum class Kind { None, Safety, Static, Dynamic };
  Kind kind = Kind::None;
  ConnectivityGraph required;                            // static
  std::vector<std::vector<std::pair<int, int>>> or_groups;  // static
  AllowableGraphSet allowable;                           // dynamic
};

// nullopt for Kind::None.
std::optional<BarrierTree> build_certificate(const TeamParams& params,
                                             const CertificateSpec& spec);

using StateSampler = std::function<EnsembleState(std::mt19937_64&)>;

// Uniform positions in [lo, hi]^2 per robot, velocities uniform in the
// max_speed ball, rejection-sampled until tree membership holds (at most
// max_attempts draws per accepted sample; returns the last draw unfiltered
// once exhausted, which check_validity then counts as skipped).
StateSampler make_arena_sampler(const TeamParams& params, const BarrierTree& tree, Vec2 lo,
                                Vec2 hi, int max_attempts = 100000);

struct ValidityCounterexample {
  EnsembleState state;
  double margin;  // max over the control box of a.u + c (negative here)
};

struct ValidityReport {
  int requested = 0;
  int evaluated = 0;     // samples with membership true
  int skipped = 0;       // sampler yielded out-of-set states (warning count)
  int feasible = 0;      // evaluated samples with non-empty admissible set
  double feasible_fraction = 0.0;  // over evaluated samples
  double worst_margin = 0.0;       // min over evaluated samples
  std::vector<ValidityCounterexample> counterexamples;  // capped at 10
  bool set_likely_empty = false;   // no in-set sample found at all

  bool passed() const { return evaluated > 0 && feasible == evaluated; }
};

// Checks Lemma-3-style validity numerically: for `count` sampled in-set
// states, maximizes a.u + c in closed form over the box |u_i|_inf <= max_accel
// (sum_k |a_k| max_accel + c) and reports how often the admissible set is
// non-empty.
ValidityReport check_validity(const BarrierTree& tree, const TeamParams& params,
                              const ClassKappa& alpha, const StateSampler& sampler, int count,
                              std::uint64_t seed);

}  // namespace cbf
