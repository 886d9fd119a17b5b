#include "cplds/oracle.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cplds {

CorenessMap exact_coreness(const Graph& g) {
  const vertex_id n = g.num_vertices();
  CorenessMap core(n, 0);
  if (n == 0) return core;

  std::vector<uint32_t> deg(n);
  uint32_t max_deg = 0;
  for (vertex_id v = 0; v < n; ++v) {
    deg[v] = static_cast<uint32_t>(g.degree(v));
    max_deg = std::max(max_deg, deg[v]);
  }

  // Counting sort by degree (Batagelj-Zaversnik layout).
  std::vector<uint32_t> bin(max_deg + 2, 0);
  for (vertex_id v = 0; v < n; ++v) ++bin[deg[v]];
  uint32_t start = 0;
  for (uint32_t d = 0; d <= max_deg; ++d) {
    uint32_t count = bin[d];
    bin[d] = start;
    start += count;
  }
  std::vector<vertex_id> order(n);   // vertices sorted by residual degree
  std::vector<uint32_t> pos(n);
  for (vertex_id v = 0; v < n; ++v) {
    pos[v] = bin[deg[v]]++;
    order[pos[v]] = v;
  }
  for (uint32_t d = max_deg; d >= 1; --d) bin[d] = bin[d - 1];
  bin[0] = 0;

  for (uint32_t i = 0; i < n; ++i) {
    vertex_id v = order[i];
    core[v] = deg[v];
    for (vertex_id u : g.neighbors(v)) {
      if (deg[u] <= deg[v]) continue;
      // Move u one slot toward the front of its degree bucket, then
      // shrink its degree.
      uint32_t du = deg[u];
      uint32_t pu = pos[u];
      uint32_t pw = bin[du];
      vertex_id w = order[pw];
      if (u != w) {
        std::swap(order[pu], order[pw]);
        pos[u] = pw;
        pos[w] = pu;
      }
      ++bin[du];
      --deg[u];
    }
  }
  return core;
}

std::vector<std::string> audit_lds(const Graph& g, const LevelState& state) {
  std::vector<std::string> out;
  const LevelParams& p = state.params();
  for (vertex_id v = 0; v < g.num_vertices(); ++v) {
    uint32_t l = state.level(v);
    if (l >= p.num_levels) {
      std::ostringstream os;
      os << "vertex " << v << ": level " << l << " out of range";
      out.push_back(os.str());
      continue;
    }
    uint64_t up = 0, upstar = 0;
    for (vertex_id w : g.neighbors(v)) {
      uint32_t lw = state.level(w);
      if (lw >= l) ++up;
      if (lw + 1 >= l) ++upstar;
    }
    double ub = p.upper_bound(p.group_of(l));
    if (static_cast<double>(up) > ub + kBoundGuard) {
      std::ostringstream os;
      os << "vertex " << v << ": invariant 1 violated at level " << l
         << " (up-degree " << up << " > " << ub << ")";
      out.push_back(os.str());
    }
    if (l > 0) {
      double lb = p.lower_bound(p.group_of(l - 1));
      if (static_cast<double>(upstar) < lb - kBoundGuard) {
        std::ostringstream os;
        os << "vertex " << v << ": invariant 2 violated at level " << l
           << " (up*-degree " << upstar << " < " << lb << ")";
        out.push_back(os.str());
      }
    }
  }
  return out;
}

BoundReport check_bound(const std::vector<double>& estimates,
                        const CorenessMap& exact, double factor) {
  if (estimates.size() != exact.size())
    throw std::invalid_argument("check_bound: vertex sets differ");
  BoundReport r;
  for (vertex_id v = 0; v < exact.size(); ++v) {
    if (exact[v] == 0) {
      r.zero_core.push_back(v);
      continue;
    }
    double k = exact[v];
    double ratio = std::max(estimates[v] / k, k / estimates[v]);
    r.max_ratio = std::max(r.max_ratio, ratio);
    if (ratio > factor + kBoundGuard) r.offenders.push_back(v);
  }
  return r;
}

}  // namespace cplds
