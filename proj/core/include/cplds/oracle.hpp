#pragma once

#include <string>
#include <vector>

#include "cplds/engine.hpp"
#include "cplds/graph.hpp"

namespace cplds {

// Exact coreness per vertex, k(v) <= degree(v).
using CorenessMap = std::vector<uint32_t>;

// Bucket-based peeling: repeatedly remove a vertex of minimum residual
// degree; k(v) is the running maximum of the peel threshold. O(n + m).
CorenessMap exact_coreness(const Graph& g);

// Recomputes both level invariants from scratch for every vertex,
// independent of the engine's incremental bookkeeping. Empty = pass.
std::vector<std::string> audit_lds(const Graph& g, const LevelState& state);

struct BoundReport {
  double max_ratio = 1.0;
  std::vector<vertex_id> offenders;     // ratio > factor
  std::vector<vertex_id> zero_core;     // k(v) = 0, excluded from ratios
};

// Two-sided approximation check over vertices with k(v) >= 1:
// ratio(v) = max(estimate/k, k/estimate).
BoundReport check_bound(const std::vector<double>& estimates,
                        const CorenessMap& exact, double factor);

}  // namespace cplds
