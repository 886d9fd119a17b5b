#include "cplds/descriptor.hpp"

#include <algorithm>
#include <stdexcept>

namespace cplds {

DescriptorTable::DescriptorTable(vertex_id n, VertexSlot* slots)
    : n_(n), slots_(slots) {}

uint64_t DescriptorTable::begin_batch() {
  if (marked_count_.load(std::memory_order_seq_cst) != 0)
    throw std::logic_error("begin_batch: previous batch not fully unmarked");
  return batch_number_.fetch_add(1, std::memory_order_seq_cst) + 1;
}

void DescriptorTable::set_batch_edges(std::span<const Edge> edges) {
  batch_partners_.clear();
  for (const Edge& e : edges) {
    batch_partners_[e.u].push_back(e.v);
    batch_partners_[e.v].push_back(e.u);
  }
}

vertex_id DescriptorTable::find_root(vertex_id v) const {
  for (;;) {
    word w = slots_[v].desc.load(std::memory_order_seq_cst);
    if (w == kRoot || w == kUnmarked) return v;
    v = parent_of(w);
  }
}

void DescriptorTable::merge(vertex_id v, vertex_id w) {
  if (!is_marked(v) || !is_marked(w))
    throw std::logic_error("merge: both vertices must be marked");
  for (;;) {
    vertex_id rv = find(v);
    vertex_id rw = find(w);
    if (rv == rw) return;
    // Deterministic linking rule: the smaller root id wins.
    vertex_id winner = std::min(rv, rw);
    vertex_id loser = std::max(rv, rw);
    word expected = kRoot;
    slots_[loser].desc.compare_exchange_strong(expected, parent_word(winner),
                                         std::memory_order_seq_cst);
    // On CAS failure the loser gained a parent concurrently; re-find.
  }
}

vertex_id DescriptorTable::find(vertex_id v) {
  vertex_id root = find_root(v);
  // Compress: point everything on the path at the root.
  vertex_id cur = v;
  while (cur != root) {
    word w = slots_[cur].desc.load(std::memory_order_seq_cst);
    if (w == kRoot || w == kUnmarked) break;
    vertex_id next = parent_of(w);
    if (next != root)
      slots_[cur].desc.compare_exchange_strong(w, parent_word(root),
                                         std::memory_order_seq_cst);
    cur = next;
  }
  return root;
}

void DescriptorTable::mark(vertex_id v, std::span<const vertex_id> triggers) {
  if (is_marked(v)) throw std::logic_error("mark: vertex already marked");
  slots_[v].old_level.store(slots_[v].level.load(std::memory_order_seq_cst),
                             std::memory_order_seq_cst);
  marked_count_.fetch_add(1, std::memory_order_seq_cst);
  // Publish before merging: once v is visible as marked, a concurrently
  // marking batch neighbor is guaranteed to observe it (or be observed by
  // the scan below), so no updated edge ends up crossing DAGs.
  slots_[v].desc.store(kRoot, std::memory_order_seq_cst);
  auto it = batch_partners_.find(v);
  if (it != batch_partners_.end()) {
    for (vertex_id w : it->second)
      if (is_marked(w)) merge(v, w);
  }
  for (vertex_id w : triggers)
    if (is_marked(w)) merge(v, w);
}

DagStatus DescriptorTable::check_dag(word snapshot, vertex_id origin) {
  if (snapshot == kUnmarked) return DagStatus::Unmarked;
  constexpr size_t kMaxCompress = 32;
  vertex_id path[kMaxCompress];
  word seen[kMaxCompress];
  size_t depth = 0;
  vertex_id cur = origin;
  word w = snapshot;
  while (w != kRoot) {
    vertex_id parent = parent_of(w);
    word pw = slots_[parent].desc.load(std::memory_order_seq_cst);
    if (pw == kUnmarked) {
      // Roots are unmarked first, so an unmarked ancestor means the whole
      // DAG is already unmarked.
      compress(path, seen, depth, parent);
      return DagStatus::Unmarked;
    }
    if (depth < kMaxCompress) {
      path[depth] = cur;
      seen[depth] = w;
      ++depth;
    }
    cur = parent;
    w = pw;
  }
  compress(path, seen, depth, cur);
  return DagStatus::Marked;
}

void DescriptorTable::compress(const vertex_id* path, const word* seen,
                               size_t depth, vertex_id target) {
  const word tw = parent_word(target);
  for (size_t i = 0; i < depth; ++i) {
    word expected = seen[i];
    if (expected == tw) continue;
    // A failed exchange means the descriptor changed (possibly unmarked)
    // since we read it; skip rather than resurrect.
    slots_[path[i]].desc.compare_exchange_strong(expected, tw,
                                           std::memory_order_seq_cst);
  }
}

void DescriptorTable::unmark_all(WorkerPool& pool,
                                 std::span<const vertex_id> marked,
                                 const std::function<void()>& between_phases) {
  pool.parallel_for(marked.size(), [&](size_t i, unsigned) {
    vertex_id v = marked[i];
    word expected = kRoot;
    if (slots_[v].desc.compare_exchange_strong(expected, kUnmarked,
                                         std::memory_order_seq_cst))
      marked_count_.fetch_sub(1, std::memory_order_seq_cst);
  });
  if (between_phases) between_phases();
  pool.parallel_for(marked.size(), [&](size_t i, unsigned) {
    vertex_id v = marked[i];
    word w = slots_[v].desc.load(std::memory_order_seq_cst);
    while (w != kUnmarked) {
      if (slots_[v].desc.compare_exchange_weak(w, kUnmarked,
                                         std::memory_order_seq_cst)) {
        marked_count_.fetch_sub(1, std::memory_order_seq_cst);
        break;
      }
    }
  });
}

}  // namespace cplds
