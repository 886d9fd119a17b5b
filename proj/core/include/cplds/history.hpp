#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cplds/engine.hpp"

namespace cplds {

enum class ReadModeTag { Cplds, Sync, NonSync };

struct ReadRecord {
  vertex_id vertex = 0;
  uint64_t invoke_ts = 0;
  uint64_t return_ts = 0;
  uint32_t returned_level = 0;
  ReadModeTag mode = ReadModeTag::Cplds;
};

struct BatchRecord {
  uint64_t batch_id = 0;
  uint64_t begin_ts = 0;
  uint64_t end_ts = 0;
  std::vector<MoverRecord> movers;
};

// A complete recorded run. Timestamps come from one monotonic clock; all
// vertices start at level 0 before the first batch.
struct History {
  vertex_id n = 0;
  std::vector<BatchRecord> batches;  // sequential: batches never overlap
  std::vector<ReadRecord> reads;
};

// Tab-separated line format: one header line "H n", then "B id begin end",
// "M batch_id v old new dag_root", "R v invoke return level mode" lines.
void save_history(std::ostream& out, const History& h);
void save_history_file(const std::string& path, const History& h);
History load_history(std::istream& in);       // throws std::runtime_error
History load_history_file(const std::string& path);

// Necessary-condition linearizability check:
//  (a) boundary rule: every read's returned level equals its vertex's level
//      at the start or end of some batch overlapping the read (the stable
//      level if no batch overlaps);
//  (b) DAG inversion: among reads attributable to exactly one batch, a read
//      returning an OLD level of a DAG must not start after a read
//      returning a NEW level of the same DAG returned.
// Empty result = consistent. Throws std::runtime_error on malformed input.
std::vector<std::string> check_history(const History& h);

// Exhaustive linearization search for micro-histories: each batch is split
// into per-DAG commit operations that atomically apply that DAG's level
// changes; a legal linearization must respect real-time order and make
// every read return its vertex's current level. Intended for histories of
// at most ~12 operations; throws std::invalid_argument beyond 24.
bool linearizable_micro(const History& h);

}  // namespace cplds
