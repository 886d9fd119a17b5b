#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "cplds/descriptor.hpp"
#include "cplds/graph.hpp"
#include "cplds/params.hpp"
#include "cplds/parallel.hpp"

namespace cplds {

// Callbacks the batch passes invoke when vertices change level. The CPLDS
// build forwards these to the descriptor table; baseline builds ignore them.
struct UpdateHooks {
  virtual ~UpdateHooks() = default;
  virtual bool is_marked(vertex_id) const { return false; }
  virtual void mark(vertex_id, std::span<const vertex_id> /*triggers*/) {}
  virtual void merge(vertex_id, vertex_id) {}
};

// Pause points exposed to tests; all run on the coordinating update thread.
struct EngineHooks {
  std::function<void(uint32_t)> after_level;  // after a level round completes
  std::function<void()> before_unmark;
  std::function<void()> between_unmark_phases;
  std::function<void()> after_unmark;
};

struct Mover {
  vertex_id v;
  uint32_t old_level;
  uint32_t new_level;
};

struct MoveReport {
  std::vector<Mover> movers;
  uint64_t total_moves = 0;  // level steps, >= movers.size()
};

// Per-vertex level assignment plus incrementally maintained neighbor
// bookkeeping. Levels are single-word atomics readable from any thread;
// everything else belongs to the update workers.
class LevelState {
 public:
  LevelState(vertex_id n, LevelParams params);

  const LevelParams& params() const { return params_; }
  uint32_t level(vertex_id v) const {
    return slots_[v].level.load(std::memory_order_seq_cst);
  }
  VertexSlot* slots() { return slots_.data(); }
  double estimate_of_level(uint32_t l) const { return estimate_[l]; }

  // Neighbors at level >= level(v).
  uint32_t up_degree(vertex_id v) const {
    return static_cast<uint32_t>(up_[v].load(std::memory_order_relaxed));
  }
  // Neighbors at level >= level(v) - 1.
  uint32_t upstar_degree(vertex_id v) const {
    return static_cast<uint32_t>(upstar_[v].load(std::memory_order_relaxed));
  }

  bool invariant1_holds(vertex_id v) const;
  bool invariant2_holds(vertex_id v) const;

  // Highest level below level(v) where invariant 2 would hold (0 always
  // qualifies). Throws std::logic_error if v does not violate invariant 2.
  uint32_t desire_level(vertex_id v) const;

  // Upward pass. Precondition: batch normalized, kind=Insert, already
  // applied to g. Visits levels in increasing order; at each level all
  // invariant-1 violators move up one level under a parallel-for contract.
  MoveReport batch_insert(const Graph& g, const EdgeBatch& b,
                          UpdateHooks& hooks, WorkerPool& pool,
                          EngineHooks* eh = nullptr);

  // Downward pass: violators of invariant 2 move to their desire levels,
  // target levels visited in increasing order.
  MoveReport batch_delete(const Graph& g, const EdgeBatch& b,
                          UpdateHooks& hooks, WorkerPool& pool,
                          EngineHooks* eh = nullptr);

  // Compares the incremental bookkeeping against a from-scratch recount.
  std::vector<std::string> verify_bookkeeping(const Graph& g) const;

  // Test/fault-injection hook: overwrite a level without bookkeeping.
  void debug_set_level(vertex_id v, uint32_t l) {
    slots_[v].level.store(l, std::memory_order_seq_cst);
  }

  // Recounts all bookkeeping from the graph and current levels (companion
  // to debug_set_level for hand-built states).
  void rebuild_bookkeeping(const Graph& g);

 private:
  struct SpinLock {
    std::atomic_flag f = ATOMIC_FLAG_INIT;
    void lock() {
      while (f.test_and_set(std::memory_order_acquire)) {}
    }
    void unlock() { f.clear(std::memory_order_release); }
  };

  bool inv1_violated(vertex_id v) const;
  bool inv2_violated(vertex_id v) const;
  uint32_t desire_level_unchecked(vertex_id v) const;
  void bookkeep_edge(vertex_id u, vertex_id w, int sign);
  void recompute_self(vertex_id v);
  void enqueue(std::vector<std::vector<vertex_id>>& buckets, vertex_id v,
               uint32_t target);

  LevelParams params_;
  vertex_id n_;
  std::vector<VertexSlot> slots_;
  std::vector<std::atomic<int32_t>> up_;
  std::vector<std::atomic<int32_t>> upstar_;
  // Count of neighbors per level; keys with zero counts are erased.
  std::vector<std::map<uint32_t, uint32_t>> nbr_levels_;
  std::vector<SpinLock> locks_;
  std::vector<std::atomic<uint32_t>> queued_;      // bucket stamp: level+1, 0=none
  std::vector<std::atomic<uint32_t>> round_;       // mover round stamp
  std::vector<std::atomic<uint32_t>> affected_;    // dedupe stamp (delete pass)
  std::vector<uint8_t> moved_;                     // moved this batch
  std::vector<uint32_t> batch_old_;                // level before first move
  std::vector<double> estimate_;                   // per-level coreness estimate
  std::vector<double> bound1_;                     // per-group invariant-1 bound
  std::vector<double> bound2_;                     // per-group invariant-2 bound
  uint32_t round_counter_ = 0;
};

struct ReadResult {
  uint32_t level = 0;
  uint32_t retries = 0;
};

struct MoverRecord {
  vertex_id v;
  uint32_t old_level;
  uint32_t new_level;
  vertex_id dag_root;  // captured just before unmarking
};

struct BatchResult {
  uint64_t batch_id = 0;
  std::vector<MoverRecord> movers;
  uint64_t total_moves = 0;
};

// The full structure: graph + levels + descriptors + the update worker
// pool. Single update component, any number of concurrent reader threads.
class Cplds {
 public:
  enum class Mode {
    Synchronized,  // maintain descriptors (linearizable reads)
    Plain,         // no descriptors (SyncReads / NonSync baselines)
  };

  Cplds(vertex_id n, LevelParams params, unsigned update_workers, Mode mode);

  Graph& graph() { return graph_; }
  const Graph& graph() const { return graph_; }
  LevelState& levels() { return levels_; }
  const LevelState& levels() const { return levels_; }
  DescriptorTable& descriptors() { return descriptors_; }
  WorkerPool& pool() { return pool_; }
  Mode mode() const { return mode_; }

  // Applies one normalized batch end to end: begin_batch, structural
  // update, bookkeeping, level pass, then two-phase unmark.
  BatchResult apply(const EdgeBatch& batch, EngineHooks* hooks = nullptr);

  // The linearizable asynchronous read: sandwiched batch-number and level
  // reads around the descriptor check.
  ReadResult read_level(vertex_id v, ReadHooks* hooks = nullptr);
  double read(vertex_id v) { return estimate_of_level(read_level(v).level); }

  // Unsynchronized instantaneous level (the NonSync baseline).
  uint32_t live_level(vertex_id v) const { return levels_.level(v); }

  double estimate_of_level(uint32_t l) const {
    return levels_.estimate_of_level(l);
  }

 private:
  Graph graph_;
  LevelState levels_;
  DescriptorTable descriptors_;
  WorkerPool pool_;
  Mode mode_;
  std::unique_ptr<UpdateHooks> hooks_;
};

}  // namespace cplds
