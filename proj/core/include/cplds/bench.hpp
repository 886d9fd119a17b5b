#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cplds/graph.hpp"
#include "cplds/history.hpp"

namespace cplds {

struct RunConfig {
  // "gnp:<n>:<m>", "climb:<n_core>:<steps>", "climbmix:<n>:<m>:<n_core>",
  // or a path to an edge-list file.
  std::string source;
  size_t batch_size = 10000;
  unsigned update_workers = 2;
  unsigned readers = 1;
  ReadModeTag mode = ReadModeTag::Cplds;
  double delta = 0.2;
  double lambda = 9.0;
  uint64_t seed = 1;
  bool mirror_delete = false;   // replay the insert stream as deletions
  bool record = false;          // keep the full history in the report
  size_t snapshot_every = 1;    // exact-coreness snapshot sampling stride
  size_t max_queued_reads = 1 << 16;  // sync-mode per-reader queue cap
  uint64_t read_gap_ns = 0;           // min spacing between reads per reader
};

struct MetricsReport {
  std::string mode;
  size_t batch_size = 0;
  unsigned workers = 0;
  unsigned readers = 0;
  double mean_ns = 0;
  uint64_t p99_ns = 0;
  uint64_t p9999_ns = 0;
  double read_tput = 0;        // completed reads per second
  double upd_mean_ms = 0;
  double upd_max_ms = 0;
  double err_mean = 0;         // per-read error vs. boundary ground truth
  double err_max = 0;
  uint64_t read_count = 0;
  uint64_t batch_count = 0;
  // Deterministic (timing-free) companions: error of the level assignment
  // itself at sampled batch boundaries.
  double boundary_err_mean = 0;
  double boundary_err_max = 0;
  std::vector<uint32_t> final_levels;
  History history;             // populated when RunConfig::record is set
};

struct Stream {
  vertex_id n = 0;
  std::vector<Edge> edges;  // deduplicated, no self-loops
};

// Parses a source spec (see RunConfig::source). Throws std::runtime_error
// on unreadable files or malformed specs.
Stream make_stream(const std::string& source, uint64_t seed);

// All-pairs edges of `steps` disjoint n_core-cliques, each clique emitted
// contiguously so a batch densifies one vertex set at a time and forces
// multi-level climbs. Requires n_core >= 3.
std::vector<Edge> adversarial_climb(vertex_id n_core, uint32_t steps);

// Partitions the stream into Insert batches of batch_size; with mirror, a
// Delete phase replays the batches in reverse (edges reversed within each).
// Throws std::invalid_argument on an empty stream.
std::vector<EdgeBatch> gen_workload(std::span<const Edge> stream,
                                    size_t batch_size, bool mirror);

// Nearest-rank percentile: the ceil(q*N)-th smallest sample. Throws
// std::invalid_argument on empty samples or q outside (0, 1).
uint64_t percentile(std::vector<uint64_t> samples, double q);

MetricsReport run(const RunConfig& cfg);

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const MetricsReport& r);

}  // namespace cplds
