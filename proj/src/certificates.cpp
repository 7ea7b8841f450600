#include "cbf/certificates.hpp"

#include <algorithm>
#include <cmath>

namespace cbf {

void ConnectivityGraph::add_edge(int i, int j) {
  if (i == j) throw InputError("ConnectivityGraph: self-loop");
  edges.emplace_back(std::min(i, j), std::max(i, j));
}

void ConnectivityGraph::validate() const {
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw InputError("ConnectivityGraph: edge index out of range");
    if (i == j) throw InputError("ConnectivityGraph: self-loop");
    if (!seen.insert({i, j}).second) throw InputError("ConnectivityGraph: duplicate edge");
  }
}

void AllowableGraphSet::validate() const {
  if (graphs.empty()) throw InputError("AllowableGraphSet: empty graph list");
  const int n = graphs.front().n;
  for (const auto& g : graphs) {
    if (g.n != n) throw InputError("AllowableGraphSet: graphs over different vertex sets");
    g.validate();
  }
}

namespace {

std::vector<BarrierTree> safety_atom_trees(const TeamParams& params) {
  std::vector<BarrierTree> atoms;
  for (int i = 0; i < params.n; ++i)
    for (int j = i + 1; j < params.n; ++j)
      atoms.push_back(BarrierTree::atom(std::make_shared<SafetyPairAtom>(i, j, params)));
  return atoms;
}

BarrierTree connectivity_atom_tree(const TeamParams& params, int i, int j) {
  return BarrierTree::atom(std::make_shared<ConnectivityPairAtom>(i, j, params));
}

}  // namespace

BarrierTree build_safety_certificate(const TeamParams& params) {
  params.validate();
  return compose_and(safety_atom_trees(params));
}

BarrierTree build_static_certificate(const TeamParams& params, const ConnectivityGraph& graph) {
  params.validate();
  if (graph.n != params.n)
    throw InputError("build_static_certificate: graph vertex count does not match team size");
  graph.validate();
  std::vector<BarrierTree> factors = safety_atom_trees(params);
  for (const auto& [i, j] : graph.edges) factors.push_back(connectivity_atom_tree(params, i, j));
  return compose_and(std::move(factors));
}

BarrierTree build_dynamic_certificate(const TeamParams& params, const AllowableGraphSet& graphs) {
  params.validate();
  graphs.validate();
  if (graphs.graphs.front().n != params.n)
    throw InputError("build_dynamic_certificate: graph vertex count does not match team size");
  std::vector<BarrierTree> branches;
  for (const auto& g : graphs.graphs) {
    std::vector<BarrierTree> edge_atoms;
    for (const auto& [i, j] : g.edges) edge_atoms.push_back(connectivity_atom_tree(params, i, j));
    if (edge_atoms.empty())
      throw InputError("build_dynamic_certificate: allowable graph with no edges");
    branches.push_back(compose_and(std::move(edge_atoms)));
  }
  std::vector<BarrierTree> factors = safety_atom_trees(params);
  factors.push_back(compose_or(std::move(branches)));
  return compose_and(std::move(factors));
}

std::optional<BarrierTree> build_certificate(const TeamParams& params,
                                             const CertificateSpec& spec) {
  switch (spec.kind) {
    case CertificateSpec::Kind::None:
      return std::nullopt;
    case CertificateSpec::Kind::Safety:
      return build_safety_certificate(params);
    case CertificateSpec::Kind::Static: {
      ConnectivityGraph required = spec.required;
      required.n = params.n;
      BarrierTree base = build_static_certificate(params, required);
      if (spec.or_groups.empty()) return base;
      std::vector<BarrierTree> factors{std::move(base)};
      for (const auto& group : spec.or_groups) {
        std::vector<BarrierTree> options;
        for (const auto& [i, j] : group) options.push_back(connectivity_atom_tree(params, i, j));
        if (options.empty()) throw InputError("build_certificate: empty OR-group");
        factors.push_back(compose_or(std::move(options)));
      }
      return compose_and(std::move(factors));
    }
    case CertificateSpec::Kind::Dynamic:
      return build_dynamic_certificate(params, spec.allowable);
  }
  throw InputError("build_certificate: unreachable certificate kind");
}

StateSampler make_arena_sampler(const TeamParams& params, const BarrierTree& tree, Vec2 lo,
                                Vec2 hi, int max_attempts) {
  return [params, tree, lo, hi, max_attempts](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    EnsembleState x = EnsembleState::zero(params.n);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      for (int i = 0; i < params.n; ++i) {
        x.p(i, 0) = ux(rng);
        x.p(i, 1) = uy(rng);
        Vec2 v;
        do {
          v = Vec2(unit(rng), unit(rng));
        } while (v.squaredNorm() > 1.0);
        x.v.row(i) = (params.max_speed * v).transpose();
      }
      bool coincident = false;
      for (int i = 0; i < params.n && !coincident; ++i)
        for (int j = i + 1; j < params.n; ++j)
          if ((position_of(x, i) - position_of(x, j)).norm() < 1e-9) coincident = true;
      if (coincident) continue;
      if (membership(tree, x)) return x;
    }
    return x;  // out of set; caller counts it as skipped
  };
}

ValidityReport check_validity(const BarrierTree& tree, const TeamParams& params,
                              const ClassKappa& alpha, const StateSampler& sampler, int count,
                              std::uint64_t seed) {
  params.validate();
  alpha.validate();
  if (count <= 0) throw InputError("check_validity: sample count must be positive");

  std::mt19937_64 rng(seed);
  ValidityReport report;
  report.requested = count;
  report.worst_margin = std::numeric_limits<double>::infinity();

  for (int s = 0; s < count; ++s) {
    const EnsembleState x = sampler(rng);
    if (!membership(tree, x)) {
      ++report.skipped;
      continue;
    }
    double margin;
    try {
      const LinearControlConstraint c = eval_constraint(tree, x, alpha);
      margin = c.coeff.lpNorm<1>() * params.max_accel + c.offset;
    } catch (const InvarianceViolation&) {
      // membership holds but no constraint can be formed (sum kink); count as
      // an empty admissible set for reporting purposes
      margin = -std::numeric_limits<double>::infinity();
    }
    ++report.evaluated;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin >= 0.0) {
      ++report.feasible;
    } else if (report.counterexamples.size() < 10) {
      report.counterexamples.push_back({x, margin});
    }
  }

  report.set_likely_empty = report.evaluated == 0;
  report.feasible_fraction =
      report.evaluated > 0 ? static_cast<double>(report.feasible) / report.evaluated : 0.0;
  if (report.evaluated == 0) report.worst_margin = std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace cbf
