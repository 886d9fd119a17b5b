#include "cplds/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "cplds/engine.hpp"
#include "cplds/oracle.hpp"
#include "cplds/params.hpp"

namespace cplds {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad " + what + " in source spec: '" + s + "'");
  }
}

std::vector<Edge> gnp_edges(vertex_id n, uint64_t m, uint64_t seed) {
  if (n < 2) throw std::runtime_error("gnp source needs n >= 2");
  uint64_t max_edges = static_cast<uint64_t>(n) * (n - 1) / 2;
  if (m > max_edges)
    throw std::runtime_error("gnp source: m exceeds n*(n-1)/2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<vertex_id> pick(0, n - 1);
  std::unordered_set<uint64_t> keys;
  std::vector<Edge> edges;
  edges.reserve(m);
  while (edges.size() < m) {
    vertex_id a = pick(rng), b = pick(rng);
    if (a == b) continue;
    Edge e = make_edge(a, b);
    uint64_t key = (static_cast<uint64_t>(e.u) << 32) | e.v;
    if (keys.insert(key).second) edges.push_back(e);
  }
  return edges;
}

}  // namespace

std::vector<Edge> adversarial_climb(vertex_id n_core, uint32_t steps) {
  if (n_core < 3)
    throw std::invalid_argument("adversarial_climb: n_core must be >= 3");
  if (steps < 1)
    throw std::invalid_argument("adversarial_climb: steps must be >= 1");
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(steps) * n_core * (n_core - 1) / 2);
  for (uint32_t s = 0; s < steps; ++s) {
    vertex_id base = s * n_core;
    for (vertex_id j = 1; j < n_core; ++j)
      for (vertex_id i = 0; i < j; ++i)
        edges.push_back({base + i, base + j});
  }
  return edges;
}

Stream make_stream(const std::string& source, uint64_t seed) {
  auto parts = split(source, ':');
  if (parts[0] == "gnp") {
    if (parts.size() != 3 && parts.size() != 4)
      throw std::runtime_error("gnp source: expected gnp:<n>:<m>[:<seed>]");
    vertex_id n = static_cast<vertex_id>(parse_u64(parts[1], "n"));
    uint64_t m = parse_u64(parts[2], "m");
    if (parts.size() == 4) seed = parse_u64(parts[3], "seed");
    return {n, gnp_edges(n, m, seed)};
  }
  if (parts[0] == "climb") {
    if (parts.size() != 3)
      throw std::runtime_error("climb source: expected climb:<n_core>:<steps>");
    vertex_id n_core = static_cast<vertex_id>(parse_u64(parts[1], "n_core"));
    uint32_t steps = static_cast<uint32_t>(parse_u64(parts[2], "steps"));
    return {n_core * steps, adversarial_climb(n_core, steps)};
  }
  if (parts[0] == "climbmix") {
    if (parts.size() != 4)
      throw std::runtime_error(
          "climbmix source: expected climbmix:<n>:<m>:<n_core>");
    vertex_id n = static_cast<vertex_id>(parse_u64(parts[1], "n"));
    uint64_t m = parse_u64(parts[2], "m");
    vertex_id n_core = static_cast<vertex_id>(parse_u64(parts[3], "n_core"));
    if (n_core > n) throw std::runtime_error("climbmix: n_core > n");
    std::vector<Edge> clique = adversarial_climb(n_core, 1);
    std::vector<Edge> rand = gnp_edges(n, m, seed);
    // Spread the clique evenly through the random stream, dropping any
    // random duplicates of clique edges.
    std::unordered_set<uint64_t> clique_keys;
    for (const Edge& e : clique)
      clique_keys.insert((static_cast<uint64_t>(e.u) << 32) | e.v);
    std::vector<Edge> mixed;
    mixed.reserve(clique.size() + rand.size());
    size_t stride = std::max<size_t>(1, rand.size() / (clique.size() + 1));
    size_t ci = 0;
    for (size_t i = 0; i < rand.size(); ++i) {
      const Edge& e = rand[i];
      if (!clique_keys.count((static_cast<uint64_t>(e.u) << 32) | e.v))
        mixed.push_back(e);
      if ((i + 1) % stride == 0 && ci < clique.size())
        mixed.push_back(clique[ci++]);
    }
    while (ci < clique.size()) mixed.push_back(clique[ci++]);
    return {n, std::move(mixed)};
  }
  LoadResult loaded = load_edge_list_file(source);
  return {loaded.graph.num_vertices(), std::move(loaded.edges)};
}

std::vector<EdgeBatch> gen_workload(std::span<const Edge> stream,
                                    size_t batch_size, bool mirror) {
  if (stream.empty()) throw std::invalid_argument("gen_workload: empty stream");
  if (batch_size < 1)
    throw std::invalid_argument("gen_workload: batch_size must be >= 1");
  std::vector<EdgeBatch> batches;
  for (size_t i = 0; i < stream.size(); i += batch_size) {
    EdgeBatch b;
    b.kind = BatchKind::Insert;
    size_t end = std::min(i + batch_size, stream.size());
    b.edges.assign(stream.begin() + i, stream.begin() + end);
    batches.push_back(std::move(b));
  }
  if (mirror) {
    size_t inserts = batches.size();
    for (size_t i = 0; i < inserts; ++i) {
      EdgeBatch b;
      b.kind = BatchKind::Delete;
      b.edges = batches[inserts - 1 - i].edges;
      std::reverse(b.edges.begin(), b.edges.end());
      batches.push_back(std::move(b));
    }
  }
  return batches;
}

uint64_t percentile(std::vector<uint64_t> samples, double q) {
  if (samples.empty())
    throw std::invalid_argument("percentile: empty sample set");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("percentile: q must be in (0, 1)");
  size_t rank = static_cast<size_t>(
      std::ceil(q * static_cast<double>(samples.size())));
  rank = std::min(std::max<size_t>(rank, 1), samples.size());
  std::nth_element(samples.begin(), samples.begin() + (rank - 1),
                   samples.end());
  return samples[rank - 1];
}

namespace {

const char* mode_label(ReadModeTag m) {
  switch (m) {
    case ReadModeTag::Cplds: return "cplds";
    case ReadModeTag::Sync: return "sync";
    case ReadModeTag::NonSync: return "nonsync";
  }
  return "?";
}

// Per-read error against one exact-coreness snapshot; a zero-core vertex
// should estimate 1, so its ratio is the estimate itself.
double ratio_vs(double estimate, uint32_t k) {
  if (k == 0) return estimate;
  double kd = k;
  return std::max(estimate / kd, kd / estimate);
}

struct ReaderSlot {
  std::vector<uint64_t> latencies;
  std::vector<ReadRecord> records;
  std::mutex queue_mu;
  std::vector<std::pair<uint64_t, vertex_id>> queue;  // sync mode
};

}  // namespace

MetricsReport run(const RunConfig& cfg) {
  if (cfg.update_workers < 1 || cfg.readers < 1)
    throw std::invalid_argument("run: thread counts must be >= 1");
  Stream stream = make_stream(cfg.source, cfg.seed);
  std::vector<EdgeBatch> batches =
      gen_workload(stream.edges, cfg.batch_size, cfg.mirror_delete);

  LevelParams params = make_params(std::max<uint64_t>(stream.n, 2), cfg.delta,
                                   cfg.lambda);
  Cplds s(stream.n, params, cfg.update_workers,
          cfg.mode == ReadModeTag::Cplds ? Cplds::Mode::Synchronized
                                         : Cplds::Mode::Plain);

  const auto t0 = std::chrono::steady_clock::now();
  auto now_ns = [&] {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
  };

  std::vector<ReaderSlot> slots(cfg.readers);
  std::atomic<bool> stop{false};
  std::vector<std::thread> readers;
  readers.reserve(cfg.readers);
  for (unsigned r = 0; r < cfg.readers; ++r) {
    readers.emplace_back([&, r] {
      ReaderSlot& slot = slots[r];
      std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + r + 1);
      std::uniform_int_distribution<vertex_id> pick(0, stream.n - 1);
      uint64_t next_read = 0;
      while (!stop.load(std::memory_order_relaxed)) {
        if (cfg.read_gap_ns > 0) {
          // Busy-wait pacing: bounds record growth on long runs. A yield here
          // would cost a whole scheduling quantum per read on oversubscribed
          // machines and starve the readers instead.
          while (now_ns() < next_read) {
            if (stop.load(std::memory_order_relaxed)) return;
          }
          next_read = now_ns() + cfg.read_gap_ns;
        }
        vertex_id v = pick(rng);
        if (cfg.mode == ReadModeTag::Sync) {
          uint64_t gen = now_ns();
          for (;;) {
            {
              std::lock_guard lk(slot.queue_mu);
              if (slot.queue.size() < cfg.max_queued_reads) {
                slot.queue.emplace_back(gen, v);
                break;
              }
            }
            if (stop.load(std::memory_order_relaxed)) return;
            std::this_thread::yield();
          }
          continue;
        }
        uint64_t inv = now_ns();
        uint32_t level = cfg.mode == ReadModeTag::Cplds
                             ? s.read_level(v).level
                             : s.live_level(v);
        uint64_t ret = std::max(now_ns(), inv + 1);
        slot.latencies.push_back(ret - inv);
        if (cfg.record) slot.records.push_back({v, inv, ret, level, cfg.mode});
      }
    });
  }

  auto drain_sync = [&] {
    for (ReaderSlot& slot : slots) {
      std::vector<std::pair<uint64_t, vertex_id>> pending;
      {
        std::lock_guard lk(slot.queue_mu);
        pending.swap(slot.queue);
      }
      for (auto [gen, v] : pending) {
        uint32_t level = s.live_level(v);
        uint64_t ret = std::max(now_ns(), gen + 1);
        slot.latencies.push_back(ret - gen);
        if (cfg.record)
          slot.records.push_back({v, gen, ret, level, ReadModeTag::Sync});
      }
    }
  };

  MetricsReport rep;
  rep.mode = mode_label(cfg.mode);
  rep.batch_size = cfg.batch_size;
  rep.workers = cfg.update_workers;
  rep.readers = cfg.readers;
  rep.batch_count = batches.size();
  rep.history.n = stream.n;

  // snapshots[i] = exact coreness after i batches (sampled).
  std::vector<std::optional<CorenessMap>> snapshots(batches.size() + 1);
  snapshots[0] = CorenessMap(stream.n, 0);
  std::vector<double> boundary_ratios;
  std::vector<double> update_ms;

  for (size_t bi = 0; bi < batches.size(); ++bi) {
    uint64_t begin = now_ns();
    BatchResult res = s.apply(batches[bi]);
    uint64_t end = std::max(now_ns(), begin + 1);
    update_ms.push_back(static_cast<double>(end - begin) / 1e6);
    BatchRecord record{res.batch_id, begin, end, std::move(res.movers)};
    rep.history.batches.push_back(std::move(record));
    if (cfg.mode == ReadModeTag::Sync) drain_sync();
    size_t boundary = bi + 1;
    if (boundary % cfg.snapshot_every == 0 || boundary == batches.size()) {
      snapshots[boundary] = exact_coreness(s.graph());
      std::vector<double> est(stream.n);
      for (vertex_id v = 0; v < stream.n; ++v)
        est[v] = s.estimate_of_level(s.live_level(v));
      BoundReport br = check_bound(est, *snapshots[boundary],
                                   params.theoretical_factor);
      boundary_ratios.push_back(br.max_ratio);
    }
  }

  stop.store(true, std::memory_order_relaxed);
  for (auto& t : readers) t.join();
  if (cfg.mode == ReadModeTag::Sync) drain_sync();
  uint64_t elapsed = std::max<uint64_t>(now_ns(), 1);

  rep.final_levels.resize(stream.n);
  for (vertex_id v = 0; v < stream.n; ++v)
    rep.final_levels[v] = s.live_level(v);

  std::vector<uint64_t> latencies;
  for (ReaderSlot& slot : slots) {
    latencies.insert(latencies.end(), slot.latencies.begin(),
                     slot.latencies.end());
    rep.history.reads.insert(rep.history.reads.end(), slot.records.begin(),
                             slot.records.end());
  }
  rep.read_count = latencies.size();
  rep.read_tput =
      static_cast<double>(rep.read_count) / (static_cast<double>(elapsed) / 1e9);
  if (!latencies.empty()) {
    rep.mean_ns = static_cast<double>(std::accumulate(
                      latencies.begin(), latencies.end(), uint64_t{0})) /
                  static_cast<double>(latencies.size());
    rep.p99_ns = percentile(latencies, 0.99);
    rep.p9999_ns = percentile(latencies, 0.9999);
  }
  if (!update_ms.empty()) {
    rep.upd_mean_ms = std::accumulate(update_ms.begin(), update_ms.end(), 0.0) /
                      static_cast<double>(update_ms.size());
    rep.upd_max_ms = *std::max_element(update_ms.begin(), update_ms.end());
  }
  if (!boundary_ratios.empty()) {
    rep.boundary_err_mean =
        std::accumulate(boundary_ratios.begin(), boundary_ratios.end(), 0.0) /
        static_cast<double>(boundary_ratios.size());
    rep.boundary_err_max =
        *std::max_element(boundary_ratios.begin(), boundary_ratios.end());
  }

  // Per-read error: min of the ratios against the boundary truths bracketing
  // the read's overlapping batches, using the nearest sampled snapshots.
  const auto& hb = rep.history.batches;
  auto snap_at_or_before = [&](size_t boundary) -> const CorenessMap& {
    size_t i = boundary;
    while (!snapshots[i]) --i;  // snapshots[0] always present
    return *snapshots[i];
  };
  auto snap_at_or_after = [&](size_t boundary) -> const CorenessMap& {
    size_t i = boundary;
    while (i < snapshots.size() && !snapshots[i]) ++i;
    if (i == snapshots.size()) return snap_at_or_before(boundary);
    return *snapshots[i];
  };
  double err_sum = 0;
  uint64_t err_n = 0;
  for (const ReadRecord& r : rep.history.reads) {
    double est = s.estimate_of_level(r.returned_level);
    // First overlapping batch and one past the last.
    size_t lo = hb.size(), hi = 0;
    for (size_t i = 0; i < hb.size(); ++i) {
      if (hb[i].begin_ts <= r.return_ts && hb[i].end_ts >= r.invoke_ts) {
        lo = std::min(lo, i);
        hi = std::max(hi, i + 1);
      }
      if (hb[i].begin_ts > r.return_ts) break;
    }
    double ratio;
    if (lo >= hi) {
      // Quiescent read: truth is the boundary right before the invoke.
      size_t boundary = 0;
      while (boundary < hb.size() && hb[boundary].end_ts <= r.invoke_ts)
        ++boundary;
      ratio = ratio_vs(est, snap_at_or_before(boundary)[r.vertex]);
    } else {
      double pre = ratio_vs(est, snap_at_or_before(lo)[r.vertex]);
      double post = ratio_vs(est, snap_at_or_after(hi)[r.vertex]);
      ratio = std::min(pre, post);
    }
    err_sum += ratio;
    ++err_n;
    rep.err_max = std::max(rep.err_max, ratio);
  }
  if (err_n > 0) rep.err_mean = err_sum / static_cast<double>(err_n);

  return rep;
}

void write_csv_header(std::ostream& out) {
  out << "mode,batch_size,workers,readers,mean_ns,p99_ns,p9999_ns,read_tput,"
         "upd_mean_ms,upd_max_ms,err_mean,err_max\n";
}

void write_csv_row(std::ostream& out, const MetricsReport& r) {
  out << r.mode << ',' << r.batch_size << ',' << r.workers << ',' << r.readers
      << ',' << r.mean_ns << ',' << r.p99_ns << ',' << r.p9999_ns << ','
      << r.read_tput << ',' << r.upd_mean_ms << ',' << r.upd_max_ms << ','
      << r.err_mean << ',' << r.err_max << '\n';
}

}  // namespace cplds
