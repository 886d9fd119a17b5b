#include <sstream>
#include <stdexcept>

#include <doctest.h>

#include "cplds/history.hpp"

using namespace cplds;

namespace {

History base_history() {
  History h;
  h.n = 6;
  // Batch 1 over [100, 200]: vertices 0,1 climb together (root 0),
  // vertex 3 climbs alone (root 3).
  BatchRecord b1{1, 100, 200, {{0, 0, 4, 0}, {1, 0, 3, 0}, {3, 0, 2, 3}}};
  // Batch 2 over [300, 400]: vertex 0 climbs again.
  BatchRecord b2{2, 300, 400, {{0, 4, 6, 0}}};
  h.batches = {b1, b2};
  return h;
}

}  // namespace

TEST_CASE("history round-trips through the text format") {
  History h = base_history();
  h.reads.push_back({1, 150, 160, 0, ReadModeTag::Cplds});
  h.reads.push_back({5, 10, 20, 0, ReadModeTag::NonSync});
  std::stringstream ss;
  save_history(ss, h);
  History r = load_history(ss);
  CHECK(r.n == h.n);
  REQUIRE(r.batches.size() == 2);
  CHECK(r.batches[0].movers.size() == 3);
  CHECK(r.batches[1].begin_ts == 300);
  REQUIRE(r.reads.size() == 2);
  CHECK(r.reads[0].returned_level == 0);
  CHECK(r.reads[1].mode == ReadModeTag::NonSync);
  CHECK(check_history(r).empty());
}

TEST_CASE("loader rejects malformed histories") {
  auto loads = [](const std::string& text) {
    std::istringstream in(text);
    return load_history(in);
  };
  CHECK_THROWS_AS(loads("B 1 0 5\n"), std::runtime_error);  // no header
  CHECK_THROWS_AS(loads("H 4\nX 1\n"), std::runtime_error);
  CHECK_THROWS_AS(loads("H 4\nM 1 0 0 1 0\n"), std::runtime_error);
  CHECK_THROWS_AS(loads("H 4\nR 0 5 9 0 cplds extra\n"), std::runtime_error);
  CHECK_THROWS_AS(loads("H 4\nR 0 5 9 0 weird\n"), std::runtime_error);
}

TEST_CASE("boundary rule accepts start and end levels of overlapping batches") {
  History h = base_history();
  SUBCASE("stable level of a never-moved vertex") {
    h.reads.push_back({5, 150, 250, 0, ReadModeTag::Cplds});
    CHECK(check_history(h).empty());
  }
  SUBCASE("old level during the batch") {
    h.reads.push_back({0, 110, 120, 0, ReadModeTag::Cplds});
    CHECK(check_history(h).empty());
  }
  SUBCASE("new level during the batch") {
    h.reads.push_back({0, 110, 120, 4, ReadModeTag::Cplds});
    CHECK(check_history(h).empty());
  }
  SUBCASE("level between batches") {
    h.reads.push_back({0, 210, 290, 4, ReadModeTag::Cplds});
    CHECK(check_history(h).empty());
  }
  SUBCASE("read spanning two batches may return either boundary") {
    for (uint32_t level : {0u, 4u, 6u}) {
      History g = base_history();
      g.reads.push_back({0, 110, 390, level, ReadModeTag::Cplds});
      CHECK(check_history(g).empty());
    }
  }
  SUBCASE("intermediate level is flagged") {
    h.reads.push_back({0, 110, 120, 2, ReadModeTag::NonSync});
    auto v = check_history(h);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("boundary") != std::string::npos);
  }
  SUBCASE("pre-batch read must see the pre-batch level") {
    h.reads.push_back({0, 10, 20, 4, ReadModeTag::Cplds});
    CHECK(check_history(h).size() == 1);
  }
}

TEST_CASE("DAG inversions are flagged, unrelated DAGs are not") {
  History h = base_history();
  // A read of vertex 1 (DAG root 0) sees the NEW level and returns at 130;
  // a later read of vertex 0 (same DAG) starting at 140 sees the OLD level.
  h.reads.push_back({1, 120, 130, 3, ReadModeTag::Cplds});
  h.reads.push_back({0, 140, 150, 0, ReadModeTag::Cplds});
  SUBCASE("same DAG: violation") {
    auto v = check_history(h);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("old level") != std::string::npos);
  }
  SUBCASE("different DAG: no violation") {
    History g = base_history();
    g.reads.push_back({1, 120, 130, 3, ReadModeTag::Cplds});
    g.reads.push_back({3, 140, 150, 0, ReadModeTag::Cplds});  // root 3
    CHECK(check_history(g).empty());
  }
  SUBCASE("overlapping reads (not ordered) are allowed either way") {
    History g = base_history();
    g.reads.push_back({1, 120, 150, 3, ReadModeTag::Cplds});
    g.reads.push_back({0, 130, 160, 0, ReadModeTag::Cplds});
    CHECK(check_history(g).empty());
  }
}

TEST_CASE("check_history validates record structure") {
  History h = base_history();
  SUBCASE("inverted read interval") {
    h.reads.push_back({0, 20, 10, 0, ReadModeTag::Cplds});
    CHECK_THROWS_AS(check_history(h), std::runtime_error);
  }
  SUBCASE("overlapping batches") {
    h.batches[1].begin_ts = 150;
    CHECK_THROWS_AS(check_history(h), std::runtime_error);
  }
  SUBCASE("mover with equal levels") {
    h.batches[0].movers[0].new_level = 0;
    CHECK_THROWS_AS(check_history(h), std::runtime_error);
  }
  SUBCASE("broken level chain is reported as a violation") {
    h.batches[1].movers[0].old_level = 5;
    CHECK(!check_history(h).empty());
  }
}

TEST_CASE("micro linearization: sequential histories always pass") {
  History h = base_history();
  h.reads.push_back({0, 10, 20, 0, ReadModeTag::Cplds});
  h.reads.push_back({0, 210, 220, 4, ReadModeTag::Cplds});
  h.reads.push_back({0, 410, 420, 6, ReadModeTag::Cplds});
  CHECK(linearizable_micro(h));
}

TEST_CASE("micro linearization: concurrent boundary reads pass") {
  History h = base_history();
  h.reads.push_back({0, 110, 130, 0, ReadModeTag::Cplds});
  h.reads.push_back({1, 120, 140, 3, ReadModeTag::Cplds});
  h.reads.push_back({3, 150, 170, 0, ReadModeTag::Cplds});
  CHECK(linearizable_micro(h));
}

TEST_CASE("micro linearization rejects inversions and intermediates") {
  SUBCASE("new-then-old on the same DAG") {
    History h = base_history();
    h.reads.push_back({1, 110, 120, 3, ReadModeTag::Cplds});
    h.reads.push_back({0, 130, 140, 0, ReadModeTag::Cplds});
    CHECK(!linearizable_micro(h));
  }
  SUBCASE("impossible level") {
    History h = base_history();
    h.reads.push_back({0, 110, 120, 2, ReadModeTag::Cplds});
    CHECK(!linearizable_micro(h));
  }
  SUBCASE("post-batch read of the old level") {
    History h = base_history();
    h.reads.push_back({0, 210, 220, 0, ReadModeTag::Cplds});
    CHECK(!linearizable_micro(h));
  }
}

TEST_CASE("micro linearization agrees with check_history on micro samples") {
  // The necessary-condition checker may accept histories the exhaustive
  // search rejects, but never the other way around.
  History h = base_history();
  h.reads.push_back({1, 120, 130, 3, ReadModeTag::Cplds});
  h.reads.push_back({0, 140, 150, 0, ReadModeTag::Cplds});
  CHECK(!check_history(h).empty());
  CHECK(!linearizable_micro(h));
}
