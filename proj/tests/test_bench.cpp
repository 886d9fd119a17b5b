#include <sstream>
#include <stdexcept>

#include <doctest.h>

#include "cplds/bench.hpp"
#include "cplds/history.hpp"

using namespace cplds;

TEST_CASE("gen_workload partitions and mirrors") {
  std::vector<Edge> stream;
  for (vertex_id i = 0; i < 10; ++i) stream.push_back({i, i + 20});
  auto plain = gen_workload(stream, 4, false);
  REQUIRE(plain.size() == 3);
  CHECK(plain[0].edges.size() == 4);
  CHECK(plain[1].edges.size() == 4);
  CHECK(plain[2].edges.size() == 2);
  for (const auto& b : plain) CHECK(b.kind == BatchKind::Insert);

  auto mirrored = gen_workload(stream, 4, true);
  REQUIRE(mirrored.size() == 6);
  CHECK(mirrored[3].kind == BatchKind::Delete);
  CHECK(mirrored[3].edges.size() == 2);
  CHECK(mirrored[4].edges.size() == 4);
  CHECK(mirrored[5].edges.size() == 4);
  // The very last deleted edge is the very first inserted one.
  CHECK(mirrored[5].edges.back() == stream.front());

  CHECK_THROWS_AS(gen_workload({}, 4, false), std::invalid_argument);
  CHECK_THROWS_AS(gen_workload(stream, 0, false), std::invalid_argument);
}

TEST_CASE("nearest-rank percentile") {
  std::vector<uint64_t> v;
  for (uint64_t i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(percentile(v, 0.99) == 99);
  CHECK(percentile(v, 0.5) == 50);
  CHECK(percentile({5}, 0.9999) == 5);
  CHECK(percentile({3, 1, 2}, 0.5) == 2);
  CHECK_THROWS_AS(percentile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(percentile({1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(percentile({1}, 1.0), std::invalid_argument);
}

TEST_CASE("adversarial climb stream shape") {
  auto tri = adversarial_climb(3, 1);
  REQUIRE(tri.size() == 3);
  CHECK(tri[0] == Edge{0, 1});
  CHECK(tri[1] == Edge{0, 2});
  CHECK(tri[2] == Edge{1, 2});

  auto two = adversarial_climb(4, 2);
  CHECK(two.size() == 12);
  CHECK(two[6] == Edge{4, 5});  // second clique offset by n_core

  CHECK(adversarial_climb(4, 2) == two);  // deterministic
  CHECK_THROWS_AS(adversarial_climb(2, 1), std::invalid_argument);
}

TEST_CASE("stream sources parse and validate") {
  Stream g = make_stream("gnp:50:100", 9);
  CHECK(g.n == 50);
  CHECK(g.edges.size() == 100);
  CHECK(make_stream("gnp:50:100", 9).edges == g.edges);
  CHECK(make_stream("gnp:50:100:4", 9).edges ==
        make_stream("gnp:50:100:4", 777).edges);

  Stream c = make_stream("climb:8:3", 1);
  CHECK(c.n == 24);
  CHECK(c.edges.size() == 3 * 28);

  Stream m = make_stream("climbmix:40:200:8", 2);
  CHECK(m.n == 40);
  CHECK(m.edges.size() >= 200);  // random stream plus clique, minus overlaps

  CHECK_THROWS_AS(make_stream("gnp:50", 1), std::runtime_error);
  CHECK_THROWS_AS(make_stream("gnp:2:5", 1), std::runtime_error);
  CHECK_THROWS_AS(make_stream("climb:x:1", 1), std::runtime_error);
  CHECK_THROWS_AS(make_stream("/nonexistent/file.txt", 1),
                  std::runtime_error);
}

TEST_CASE("run produces coherent metrics and a checkable history") {
  RunConfig cfg;
  cfg.source = "gnp:100:400";
  cfg.batch_size = 100;
  cfg.update_workers = 2;
  cfg.readers = 1;
  cfg.mode = ReadModeTag::Cplds;
  cfg.seed = 12;
  cfg.mirror_delete = true;
  cfg.record = true;
  MetricsReport r = run(cfg);
  CHECK(r.batch_count == 8);
  CHECK(r.history.batches.size() == 8);
  CHECK(r.read_count == r.history.reads.size());
  CHECK(r.final_levels.size() == 100);
  for (uint32_t l : r.final_levels) CHECK(l == 0);  // fully reverted
  if (r.read_count > 0) {
    CHECK(r.p99_ns <= r.p9999_ns);
    CHECK(r.mean_ns > 0);
  }
  CHECK(r.boundary_err_max <= 2.8 + 1e-9);
  CHECK(check_history(r.history).empty());
}

TEST_CASE("read mode never perturbs updates") {
  auto final_levels = [](ReadModeTag mode) {
    RunConfig cfg;
    cfg.source = "gnp:80:300";
    cfg.batch_size = 75;
    cfg.update_workers = 2;
    cfg.readers = 1;
    cfg.mode = mode;
    cfg.seed = 5;
    return run(cfg).final_levels;
  };
  auto a = final_levels(ReadModeTag::Cplds);
  CHECK(a == final_levels(ReadModeTag::Sync));
  CHECK(a == final_levels(ReadModeTag::NonSync));
}

TEST_CASE("csv schema") {
  std::ostringstream out;
  write_csv_header(out);
  MetricsReport r;
  r.mode = "cplds";
  r.batch_size = 10;
  r.workers = 2;
  r.readers = 1;
  write_csv_row(out, r);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header ==
        "mode,batch_size,workers,readers,mean_ns,p99_ns,p9999_ns,read_tput,"
        "upd_mean_ms,upd_max_ms,err_mean,err_max");
  CHECK(row.substr(0, 13) == "cplds,10,2,1,");
  size_t commas = 0;
  for (char ch : row) commas += ch == ',';
  CHECK(commas == 11);
}
