#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cplds/graph.hpp"
#include "cplds/parallel.hpp"

namespace cplds {

enum class DagStatus { Marked, Unmarked };

// Pause points a reader exposes to scripted-schedule tests. All hooks are
// optional and off the hot path when empty.
struct ReadHooks {
  std::function<void()> after_batch_read1;
  std::function<void()> after_level_read1;
  std::function<void()> after_desc_read;
  std::function<void()> after_check_dag;
  std::function<void()> after_level_read2;
  std::function<void()> after_batch_read2;
};

// Per-vertex hot state, packed so a read touches a single cache line:
// the live level, the operation descriptor word, and the pre-batch level.
struct alignas(16) VertexSlot {
  std::atomic<uint32_t> level{0};
  std::atomic<uint32_t> desc{0};
  std::atomic<uint32_t> old_level{0};
  uint32_t pad_ = 0;
};

// Per-vertex operation descriptors plus the batch counter.
//
// Each descriptor is a single atomic word:
//   0            -> UNMARKED
//   1            -> marked, root of its dependency DAG
//   2 + parent   -> marked, with a parent pointer
// old_level lives in a companion slot written strictly before the word is
// published, and is immutable while the vertex stays marked.
class DescriptorTable {
 public:
  using word = uint32_t;
  static constexpr word kUnmarked = 0;
  static constexpr word kRoot = 1;

  DescriptorTable(vertex_id n, VertexSlot* slots);

  uint64_t batch_number() const {
    return batch_number_.load(std::memory_order_seq_cst);
  }

  // Increments the batch counter. Throws std::logic_error if any descriptor
  // from the previous batch is still marked.
  uint64_t begin_batch();

  // Registers the edges of the current batch; mark() consults them to merge
  // with marked batch neighbors. The span must outlive the batch.
  void set_batch_edges(std::span<const Edge> edges);

  // First move of v in this batch. Records v's current level as old_level,
  // publishes the descriptor, then unions v's DAG with the DAGs of all
  // triggers and all already-marked batch neighbors of v.
  // Throws std::logic_error if v is already marked.
  void mark(vertex_id v, std::span<const vertex_id> triggers);

  // Unions the DAGs of two marked vertices. Idempotent.
  void merge(vertex_id v, vertex_id w);

  // Updater-side find with path compression. v must be marked.
  vertex_id find(vertex_id v);

  bool is_marked(vertex_id v) const {
    return slots_[v].desc.load(std::memory_order_seq_cst) != kUnmarked;
  }
  word snapshot(vertex_id v) const {
    return slots_[v].desc.load(std::memory_order_seq_cst);
  }
  uint32_t old_level(vertex_id v) const {
    return slots_[v].old_level.load(std::memory_order_seq_cst);
  }
  size_t marked_count() const {
    return marked_count_.load(std::memory_order_seq_cst);
  }

  // Reader-safe DAG walk from a descriptor snapshot. Returns Unmarked as
  // soon as any descriptor on the path reads UNMARKED; compresses the
  // traversed prefix with conditional updates that fail harmlessly.
  DagStatus check_dag(word snapshot, vertex_id origin);

  // Two-phase clear over the given marked vertices: roots first, barrier,
  // then the rest. between_phases (if set) runs at the barrier.
  void unmark_all(WorkerPool& pool, std::span<const vertex_id> marked,
                  const std::function<void()>& between_phases = {});

 private:
  static vertex_id parent_of(word w) { return static_cast<vertex_id>(w - 2); }
  static word parent_word(vertex_id p) { return static_cast<word>(p) + 2; }

  // Root of v's DAG assuming no concurrent unmarking (updater side).
  vertex_id find_root(vertex_id v) const;
  void compress(const vertex_id* path, const word* seen, size_t depth,
                vertex_id target);

  vertex_id n_;
  VertexSlot* slots_;
  std::atomic<uint64_t> batch_number_{0};
  std::atomic<int64_t> marked_count_{0};
  std::unordered_map<vertex_id, std::vector<vertex_id>> batch_partners_;
};

}  // namespace cplds
