#include "cplds/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace cplds {

Graph::Graph(vertex_id n) : n_(n), adj_(n) {}

bool Graph::has_edge(vertex_id u, vertex_id v) const {
  if (u == v) return false;
  if (u > v) std::swap(u, v);
  return edge_set_.count(key(u, v)) != 0;
}

void Graph::insert_edge(vertex_id u, vertex_id v) {
  edge_set_.insert(key(u, v));
  adj_[u].push_back(v);
  adj_[v].push_back(u);
  ++m_;
}

void Graph::delete_edge(vertex_id u, vertex_id v) {
  edge_set_.erase(key(u, v));
  auto drop = [](std::vector<vertex_id>& vec, vertex_id x) {
    auto it = std::find(vec.begin(), vec.end(), x);
    std::swap(*it, vec.back());
    vec.pop_back();
  };
  drop(adj_[u], v);
  drop(adj_[v], u);
  --m_;
}

void Graph::apply_batch(const EdgeBatch& b) {
  for (const Edge& e : b.edges) {
    if (e.u >= e.v || e.v >= n_)
      throw std::logic_error("apply_batch: edge endpoints not normalized");
    const bool present = edge_set_.count(key(e.u, e.v)) != 0;
    if (b.kind == BatchKind::Insert) {
      if (present) throw std::logic_error("apply_batch: inserting existing edge");
      insert_edge(e.u, e.v);
    } else {
      if (!present) throw std::logic_error("apply_batch: deleting absent edge");
      delete_edge(e.u, e.v);
    }
  }
}

std::vector<std::string> Graph::audit() const {
  std::vector<std::string> out;
  uint64_t adj_total = 0;
  for (vertex_id u = 0; u < n_; ++u) {
    adj_total += adj_[u].size();
    std::unordered_set<vertex_id> seen;
    for (vertex_id v : adj_[u]) {
      if (v == u) out.push_back("self loop at " + std::to_string(u));
      if (v >= n_) out.push_back("out-of-range neighbor of " + std::to_string(u));
      if (!seen.insert(v).second)
        out.push_back("duplicate neighbor " + std::to_string(v) + " of " + std::to_string(u));
      if (std::find(adj_[v].begin(), adj_[v].end(), u) == adj_[v].end())
        out.push_back("asymmetric edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
      vertex_id a = std::min(u, v), b = std::max(u, v);
      if (edge_set_.count(key(a, b)) == 0)
        out.push_back("edge set missing (" + std::to_string(a) + "," + std::to_string(b) + ")");
    }
  }
  if (adj_total != 2 * m_) out.push_back("m does not match adjacency sizes");
  if (edge_set_.size() != m_) out.push_back("m does not match edge set");
  return out;
}

LoadResult load_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::unordered_set<uint64_t> seen;
  vertex_id max_id = 0;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    uint64_t a = 0, b = 0;
    if (!(ls >> a >> b))
      throw std::runtime_error("parse error at line " + std::to_string(line_no));
    std::string rest;
    if (ls >> rest)
      throw std::runtime_error("trailing tokens at line " + std::to_string(line_no));
    if (a > 0xFFFFFFFFull || b > 0xFFFFFFFFull)
      throw std::runtime_error("vertex id overflow at line " + std::to_string(line_no));
    if (a == b) continue;  // self loop
    Edge e = make_edge(static_cast<vertex_id>(a), static_cast<vertex_id>(b));
    uint64_t k = (static_cast<uint64_t>(e.u) << 32) | e.v;
    if (!seen.insert(k).second) continue;  // duplicate
    max_id = std::max({max_id, e.u, e.v});
    edges.push_back(e);
  }
  if (edges.empty()) throw std::runtime_error("edge list is empty");
  return LoadResult{Graph(max_id + 1), std::move(edges)};
}

LoadResult load_edge_list_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return load_edge_list(f);
}

NormalizeResult normalize_batch(const Graph& g, const EdgeBatch& raw) {
  NormalizeResult r;
  r.batch.kind = raw.kind;
  std::unordered_set<uint64_t> seen;
  for (const Edge& raw_e : raw.edges) {
    Edge e = make_edge(raw_e.u, raw_e.v);
    if (e.u == e.v || e.v >= g.num_vertices()) {
      ++r.dropped;
      continue;
    }
    uint64_t k = (static_cast<uint64_t>(e.u) << 32) | e.v;
    if (!seen.insert(k).second) {
      ++r.dropped;
      continue;
    }
    const bool present = g.has_edge(e.u, e.v);
    const bool keep = (raw.kind == BatchKind::Insert) ? !present : present;
    if (keep)
      r.batch.edges.push_back(e);
    else
      ++r.dropped;
  }
  return r;
}

}  // namespace cplds
