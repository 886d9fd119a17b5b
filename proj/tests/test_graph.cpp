#include <random>
#include <sstream>
#include <stdexcept>

#include <doctest.h>

#include "cplds/graph.hpp"

using namespace cplds;

TEST_CASE("make_edge normalizes endpoint order") {
  CHECK(make_edge(3, 1) == Edge{1, 3});
  CHECK(make_edge(1, 3) == Edge{1, 3});
}

TEST_CASE("apply_batch inserts and deletes with audit-clean state") {
  Graph g(5);
  EdgeBatch ins{BatchKind::Insert, {{0, 1}, {1, 2}, {0, 2}}};
  g.apply_batch(ins);
  CHECK(g.num_edges() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(2, 1));
  CHECK(!g.has_edge(0, 3));
  CHECK(g.degree(1) == 2);
  CHECK(g.audit().empty());

  EdgeBatch del{BatchKind::Delete, {{0, 1}}};
  g.apply_batch(del);
  CHECK(g.num_edges() == 2);
  CHECK(!g.has_edge(0, 1));
  CHECK(g.audit().empty());
}

TEST_CASE("apply_batch enforces normalization preconditions") {
  Graph g(4);
  g.apply_batch({BatchKind::Insert, {{0, 1}}});
  CHECK_THROWS_AS(g.apply_batch({BatchKind::Insert, {{0, 1}}}),
                  std::logic_error);
  CHECK_THROWS_AS(g.apply_batch({BatchKind::Delete, {{2, 3}}}),
                  std::logic_error);
}

TEST_CASE("insert-then-identical-delete restores the adjacency state") {
  std::mt19937_64 rng(11);
  Graph g(40);
  std::vector<EdgeBatch> applied;
  for (int round = 0; round < 20; ++round) {
    EdgeBatch raw{BatchKind::Insert, {}};
    for (int i = 0; i < 30; ++i) {
      vertex_id a = rng() % 40, b = rng() % 40;
      if (a != b) raw.edges.push_back(make_edge(a, b));
    }
    NormalizeResult nr = normalize_batch(g, raw);
    if (nr.batch.edges.empty()) continue;
    g.apply_batch(nr.batch);
    applied.push_back(nr.batch);
    CHECK(g.audit().empty());
  }
  for (auto it = applied.rbegin(); it != applied.rend(); ++it) {
    EdgeBatch del{BatchKind::Delete, it->edges};
    g.apply_batch(del);
    CHECK(g.audit().empty());
  }
  CHECK(g.num_edges() == 0);
  for (vertex_id v = 0; v < 40; ++v) CHECK(g.degree(v) == 0);
}

TEST_CASE("normalize_batch drops duplicates and no-ops") {
  Graph g(4);
  g.apply_batch({BatchKind::Insert, {{0, 1}}});
  NormalizeResult nr = normalize_batch(
      g, {BatchKind::Insert, {{0, 1}, {1, 2}, {2, 1}, {2, 3}}});
  CHECK(nr.batch.edges.size() == 2);
  CHECK(nr.dropped == 2);  // existing (0,1) plus duplicate (1,2)

  NormalizeResult nd =
      normalize_batch(g, {BatchKind::Delete, {{0, 1}, {2, 3}, {0, 1}}});
  CHECK(nd.batch.edges.size() == 1);
  CHECK(nd.dropped == 2);
}

TEST_CASE("edge list loader parses SNAP-style text") {
  std::istringstream in(
      "# comment line\n"
      "0 1\n"
      "1 2\n"
      "\n"
      "2 2\n"   // self loop: dropped
      "1 2\n"   // duplicate: dropped
      "4 3\n");
  LoadResult r = load_edge_list(in);
  CHECK(r.graph.num_vertices() == 5);
  CHECK(r.edges.size() == 3);
  CHECK(r.edges[2] == Edge{3, 4});
}

TEST_CASE("edge list loader rejects malformed input") {
  {
    std::istringstream in("0 1\nnot numbers\n");
    CHECK_THROWS_AS(load_edge_list(in), std::runtime_error);
  }
  {
    std::istringstream in("0 1 2\n");
    CHECK_THROWS_AS(load_edge_list(in), std::runtime_error);
  }
  {
    std::istringstream in("# only comments\n");
    CHECK_THROWS_AS(load_edge_list(in), std::runtime_error);
  }
  CHECK_THROWS_AS(load_edge_list_file("/nonexistent/path.txt"),
                  std::runtime_error);
}
