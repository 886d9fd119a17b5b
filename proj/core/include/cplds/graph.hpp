#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cplds/params.hpp"

namespace cplds {

struct Edge {
  vertex_id u = 0;  // u < v always
  vertex_id v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

inline Edge make_edge(vertex_id a, vertex_id b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

enum class BatchKind { Insert, Delete };

struct EdgeBatch {
  BatchKind kind = BatchKind::Insert;
  std::vector<Edge> edges;
};

// Undirected dynamic graph over a fixed vertex universe 0..n-1.
// Mutated only through apply_batch.
class Graph {
 public:
  explicit Graph(vertex_id n);

  vertex_id num_vertices() const { return n_; }
  uint64_t num_edges() const { return m_; }
  bool has_edge(vertex_id u, vertex_id v) const;
  std::span<const vertex_id> neighbors(vertex_id v) const {
    return adj_[v];
  }
  size_t degree(vertex_id v) const { return adj_[v].size(); }

  // Precondition: b is normalized against this graph (insert edges absent,
  // delete edges present, no dups, no self-loops, ids in range).
  // Throws std::logic_error on a violated precondition.
  void apply_batch(const EdgeBatch& b);

  // Full consistency walk: symmetry, no self loops, no dups, m coherent.
  // Returns human-readable violations; empty means clean.
  std::vector<std::string> audit() const;

 private:
  static uint64_t key(vertex_id u, vertex_id v) {
    return (static_cast<uint64_t>(u) << 32) | v;
  }
  void insert_edge(vertex_id u, vertex_id v);
  void delete_edge(vertex_id u, vertex_id v);

  vertex_id n_;
  std::vector<std::vector<vertex_id>> adj_;
  std::unordered_set<uint64_t> edge_set_;  // keys of (u,v), u < v
  uint64_t m_ = 0;
};

struct LoadResult {
  Graph graph;                // empty, sized to max id + 1
  std::vector<Edge> edges;    // file order, normalized, dedup'd
};

// Parses SNAP-style "u v" lines; '#' lines are comments. Self-loops and
// duplicate edges are dropped. Throws std::runtime_error with the line
// number on malformed input, and on input containing no edges.
LoadResult load_edge_list(std::istream& in);
LoadResult load_edge_list_file(const std::string& path);

struct NormalizeResult {
  EdgeBatch batch;
  size_t dropped = 0;  // duplicates plus no-op updates
};

// Dedupes and drops no-op updates (inserts of present edges, deletes of
// absent edges) so the result satisfies the EdgeBatch invariants against g.
NormalizeResult normalize_batch(const Graph& g, const EdgeBatch& raw);

}  // namespace cplds
