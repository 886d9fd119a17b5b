#include <random>
#include <stdexcept>

#include <doctest.h>

#include "cplds/bench.hpp"
#include "cplds/engine.hpp"
#include "cplds/graph.hpp"
#include "cplds/oracle.hpp"
#include "cplds/params.hpp"
#include "oracle_util.hpp"

using namespace cplds;

namespace {

Cplds make_structure(vertex_id n, unsigned workers = 2) {
  return Cplds(n, make_params(std::max<uint64_t>(n, 2), 0.2, 9.0), workers,
               Cplds::Mode::Synchronized);
}

std::vector<Edge> clique(vertex_id n) {
  std::vector<Edge> e;
  for (vertex_id i = 0; i < n; ++i)
    for (vertex_id j = i + 1; j < n; ++j) e.push_back({i, j});
  return e;
}

void check_clean(Cplds& s) {
  CHECK(audit_lds(s.graph(), s.levels()).empty());
  CHECK(s.levels().verify_bookkeeping(s.graph()).empty());
}

double bound_ratio(Cplds& s) {
  CorenessMap exact = exact_coreness(s.graph());
  std::vector<double> est(s.graph().num_vertices());
  for (vertex_id v = 0; v < est.size(); ++v)
    est[v] = s.estimate_of_level(s.live_level(v));
  return check_bound(est, exact, s.levels().params().theoretical_factor)
      .max_ratio;
}

}  // namespace

TEST_CASE("single edge causes no moves") {
  Cplds s = make_structure(4);
  BatchResult r = s.apply({BatchKind::Insert, {{0, 1}}});
  CHECK(r.total_moves == 0);
  CHECK(r.movers.empty());
  CHECK(s.live_level(0) == 0);
  check_clean(s);
}

TEST_CASE("triangle insert: audit passes, estimates within factor") {
  Cplds s = make_structure(3);
  s.apply({BatchKind::Insert, {{0, 1}, {1, 2}, {0, 2}}});
  check_clean(s);
  for (vertex_id v = 0; v < 3; ++v) {
    double e = s.estimate_of_level(s.live_level(v));
    CHECK(e >= 2.0 / 2.8);
    CHECK(e <= 2.0 * 2.8);
  }
}

TEST_CASE("K5 in one batch: symmetric final state, audit clean") {
  Cplds s = make_structure(5);
  BatchResult r = s.apply({BatchKind::Insert, clique(5)});
  check_clean(s);
  uint32_t l = s.live_level(0);
  CHECK(l > 0);
  for (vertex_id v = 1; v < 5; ++v) CHECK(s.live_level(v) == l);
  CHECK(r.total_moves >= 5);
  CHECK(bound_ratio(s) <= 2.8 + 1e-9);
}

TEST_CASE("insert movers only move up; delete movers only move down") {
  Cplds s = make_structure(64);
  Stream stream = make_stream("gnp:64:600", 5);
  BatchResult ins = s.apply({BatchKind::Insert, stream.edges});
  for (const MoverRecord& m : ins.movers) CHECK(m.new_level > m.old_level);
  check_clean(s);
  std::vector<Edge> reversed(stream.edges.rbegin(), stream.edges.rend());
  BatchResult del = s.apply({BatchKind::Delete, reversed});
  for (const MoverRecord& m : del.movers) CHECK(m.new_level < m.old_level);
  check_clean(s);
}

TEST_CASE("deleting a triangle returns everyone to level 0") {
  Cplds s = make_structure(3);
  s.apply({BatchKind::Insert, {{0, 1}, {1, 2}, {0, 2}}});
  s.apply({BatchKind::Delete, {{0, 1}, {1, 2}, {0, 2}}});
  for (vertex_id v = 0; v < 3; ++v) CHECK(s.live_level(v) == 0);
  check_clean(s);
}

TEST_CASE("deleting one K5 edge keeps the audit and bound clean") {
  Cplds s = make_structure(5);
  s.apply({BatchKind::Insert, clique(5)});
  s.apply({BatchKind::Delete, {{0, 1}}});
  check_clean(s);
  CorenessMap exact = exact_coreness(s.graph());
  // Removing (0,1) empties the 4-core: once the two degree-3 endpoints
  // peel off, the remaining triangle can't sustain degree 4.
  for (vertex_id v = 0; v < 5; ++v) CHECK(exact[v] == 3);
  CHECK(bound_ratio(s) <= 2.8 + 1e-9);
}

TEST_CASE("empty delete batch is the identity") {
  Cplds s = make_structure(4);
  s.apply({BatchKind::Insert, {{0, 1}, {1, 2}}});
  BatchResult r = s.apply({BatchKind::Delete, {}});
  CHECK(r.total_moves == 0);
  check_clean(s);
}

TEST_CASE("desire_level hand-built examples") {
  LevelParams p = make_params(8, 0.2, 9.0);
  Graph g(8);
  g.apply_batch({BatchKind::Insert, {{0, 1}}});

  SUBCASE("isolated vertex at level 5 desires 0") {
    LevelState st(8, p);
    st.debug_set_level(7, 5);
    st.rebuild_bookkeeping(g);
    CHECK(st.desire_level(7) == 0);
  }
  SUBCASE("one neighbor at level 0, self at 2: desire 1") {
    LevelState st(8, p);
    st.debug_set_level(0, 2);
    st.rebuild_bookkeeping(g);
    CHECK(!st.invariant2_holds(0));
    CHECK(st.desire_level(0) == 1);
  }
  SUBCASE("one neighbor at level 1, self at 2: invariant 2 holds") {
    LevelState st(8, p);
    st.debug_set_level(0, 2);
    st.debug_set_level(1, 1);
    st.rebuild_bookkeeping(g);
    CHECK(st.invariant2_holds(0));
    CHECK_THROWS_AS(st.desire_level(0), std::logic_error);
  }
}

TEST_CASE("random batched runs stay audit-clean with tight bounds") {
  std::mt19937_64 rng(99);
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Stream stream = make_stream("gnp:300:2500", seed);
    auto batches = gen_workload(stream.edges, 400, true);
    Cplds s = make_structure(300, 1 + seed % 3);
    for (const EdgeBatch& b : batches) {
      s.apply(b);
      check_clean(s);
      CHECK(bound_ratio(s) <= 2.8 + 1e-9);
    }
    CHECK(s.graph().num_edges() == 0);
    for (vertex_id v = 0; v < 300; ++v) CHECK(s.live_level(v) == 0);
  }
}

TEST_CASE("adversarial climb forces multi-level jumps in one batch") {
  Stream stream = make_stream("climb:64:1", 1);
  Cplds s = make_structure(64, 2);
  BatchResult r = s.apply({BatchKind::Insert, stream.edges});
  uint32_t lpg = s.levels().params().levels_per_group;
  uint32_t best = 0;
  for (const MoverRecord& m : r.movers)
    best = std::max(best, m.new_level - m.old_level);
  CHECK(best >= 2 * lpg);
  check_clean(s);
}

TEST_CASE("final levels are independent of worker count") {
  Stream stream = make_stream("gnp:200:1500", 17);
  auto batches = gen_workload(stream.edges, 250, true);
  std::vector<uint32_t> reference;
  for (unsigned workers : {1u, 2u, 4u}) {
    Cplds s = make_structure(200, workers);
    for (const EdgeBatch& b : batches) s.apply(b);
    std::vector<uint32_t> levels(200);
    for (vertex_id v = 0; v < 200; ++v) levels[v] = s.live_level(v);
    if (reference.empty())
      reference = levels;
    else
      CHECK(levels == reference);
  }
}

TEST_CASE("estimates track coreness across a growing then shrinking graph") {
  // com-DBLP-like shape at toy scale: communities plus random overlay.
  Stream stream = make_stream("climbmix:400:3000:24", 3);
  auto batches = gen_workload(stream.edges, 500, true);
  Cplds s = make_structure(400, 2);
  for (const EdgeBatch& b : batches) {
    s.apply(b);
    check_clean(s);
    CorenessMap exact = exact_coreness(s.graph());
    CorenessMap oracle = testutil::fixpoint_coreness_large(s.graph());
    CHECK(exact == oracle);
    CHECK(bound_ratio(s) <= 2.8 + 1e-9);
  }
}
