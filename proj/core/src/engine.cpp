#include "cplds/engine.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace cplds {

namespace {

// Per-worker staging buffers; merged by the coordinator at phase barriers so
// the bucket vectors themselves are never touched concurrently.
struct Staging {
  std::vector<std::pair<vertex_id, uint32_t>> enqueued;  // (vertex, target)
  std::vector<vertex_id> first_movers;
  std::vector<vertex_id> affected;
};

}  // namespace

LevelState::LevelState(vertex_id n, LevelParams params)
    : params_(params),
      n_(n),
      slots_(n),
      up_(n),
      upstar_(n),
      nbr_levels_(n),
      locks_(n),
      queued_(n),
      round_(n),
      affected_(n),
      moved_(n, 0),
      batch_old_(n, 0) {
  for (vertex_id v = 0; v < n; ++v) {
    slots_[v].level.store(0, std::memory_order_relaxed);
    up_[v].store(0, std::memory_order_relaxed);
    upstar_[v].store(0, std::memory_order_relaxed);
    queued_[v].store(0, std::memory_order_relaxed);
    round_[v].store(0, std::memory_order_relaxed);
    affected_[v].store(0, std::memory_order_relaxed);
  }
  estimate_.reserve(params_.num_levels);
  for (uint32_t l = 0; l < params_.num_levels; ++l)
    estimate_.push_back(params_.coreness_estimate(l));
  bound1_.reserve(params_.num_groups);
  bound2_.reserve(params_.num_groups);
  for (uint32_t g = 0; g < params_.num_groups; ++g) {
    bound1_.push_back(params_.upper_bound(g));
    bound2_.push_back(params_.lower_bound(g));
  }
}

bool LevelState::inv1_violated(vertex_id v) const {
  uint32_t l = level(v);
  double bound = bound1_[params_.group_of(l)];
  return up_[v].load(std::memory_order_relaxed) > bound + kBoundGuard;
}

bool LevelState::inv2_violated(vertex_id v) const {
  uint32_t l = level(v);
  if (l == 0) return false;
  double bound = bound2_[params_.group_of(l - 1)];
  return upstar_[v].load(std::memory_order_relaxed) < bound - kBoundGuard;
}

bool LevelState::invariant1_holds(vertex_id v) const { return !inv1_violated(v); }
bool LevelState::invariant2_holds(vertex_id v) const { return !inv2_violated(v); }

uint32_t LevelState::desire_level_unchecked(vertex_id v) const {
  uint32_t l = level(v);
  const auto& nl = nbr_levels_[v];
  auto rit = nl.rbegin();
  uint64_t above = 0;  // neighbors at level >= candidate - 1 so far
  for (uint32_t cand = l - 1; cand >= 1; --cand) {
    while (rit != nl.rend() && rit->first >= cand - 1) {
      above += rit->second;
      ++rit;
    }
    if (static_cast<double>(above) >=
        bound2_[params_.group_of(cand - 1)] - kBoundGuard)
      return cand;
  }
  return 0;
}

uint32_t LevelState::desire_level(vertex_id v) const {
  if (!inv2_violated(v))
    throw std::logic_error("desire_level: vertex does not violate invariant 2");
  return desire_level_unchecked(v);
}

void LevelState::recompute_self(vertex_id v) {
  uint32_t l = level(v);
  uint32_t star_from = l == 0 ? 0 : l - 1;
  int64_t up = 0, upstar = 0;
  locks_[v].lock();
  const auto& nl = nbr_levels_[v];
  for (auto it = nl.lower_bound(star_from); it != nl.end(); ++it) {
    upstar += it->second;
    if (it->first >= l) up += it->second;
  }
  locks_[v].unlock();
  up_[v].store(static_cast<int32_t>(up), std::memory_order_relaxed);
  upstar_[v].store(static_cast<int32_t>(upstar), std::memory_order_relaxed);
}

namespace {

// Claims the "currently queued" flag; a vertex sits in at most one bucket.
bool try_claim(std::atomic<uint32_t>& flag) {
  uint32_t expected = 0;
  return flag.compare_exchange_strong(expected, 1, std::memory_order_relaxed);
}

}  // namespace

void LevelState::enqueue(std::vector<std::vector<vertex_id>>& buckets,
                         vertex_id v, uint32_t target) {
  buckets[target].push_back(v);
}

MoveReport LevelState::batch_insert(const Graph& g, const EdgeBatch& b,
                                    UpdateHooks& hooks, WorkerPool& pool,
                                    EngineHooks* eh) {
  MoveReport rep;
  if (b.edges.empty()) return rep;
  const uint32_t K = params_.num_levels;
  const unsigned W = pool.workers();
  std::vector<Staging> stage(W);
  std::vector<std::vector<vertex_id>> buckets(K);
  std::vector<vertex_id> first_movers;

  // New edges enter the bookkeeping; levels are still at rest.
  pool.parallel_for(b.edges.size(), [&](size_t i, unsigned) {
    const Edge& e = b.edges[i];
    uint32_t lu = level(e.u), lv = level(e.v);
    auto gain = [&](vertex_id a, uint32_t la, uint32_t other_l) {
      locks_[a].lock();
      ++nbr_levels_[a][other_l];
      locks_[a].unlock();
      if (other_l >= la) up_[a].fetch_add(1, std::memory_order_relaxed);
      if (other_l + 1 >= la) upstar_[a].fetch_add(1, std::memory_order_relaxed);
    };
    gain(e.u, lu, lv);
    gain(e.v, lv, lu);
  });

  uint32_t hi = 0;
  pool.parallel_for(b.edges.size(), [&](size_t i, unsigned w) {
    const Edge& e = b.edges[i];
    for (vertex_id v : {e.u, e.v})
      if (inv1_violated(v) && try_claim(queued_[v]))
        stage[w].enqueued.emplace_back(v, level(v));
  });
  for (auto& s : stage) {
    for (auto [v, t] : s.enqueued) {
      enqueue(buckets, v, t);
      hi = std::max(hi, t);
    }
    s.enqueued.clear();
  }

  std::vector<vertex_id> movers;
  for (uint32_t l = 0; l <= hi && l < K; ++l) {
    auto& bucket = buckets[l];
    if (bucket.empty()) continue;
    movers.clear();
    for (vertex_id v : bucket) {
      queued_[v].store(0, std::memory_order_relaxed);
      if (level(v) == l && inv1_violated(v)) movers.push_back(v);
    }
    bucket.clear();
    if (movers.empty()) continue;
    if (l + 1 >= K)
      throw std::logic_error("batch_insert: invariant 1 violated at top level");

    const uint32_t round = ++round_counter_;
    for (vertex_id v : movers) round_[v].store(round, std::memory_order_relaxed);

    // Phase 1: publish descriptors before any level changes.
    pool.parallel_for(movers.size(), [&](size_t i, unsigned) {
      vertex_id v = movers[i];
      std::vector<vertex_id> triggers;
      for (vertex_id w : g.neighbors(v))
        if (level(w) >= l && hooks.is_marked(w)) triggers.push_back(w);
      if (!hooks.is_marked(v))
        hooks.mark(v, triggers);
      else
        for (vertex_id w : triggers) hooks.merge(v, w);
    });

    // Phase 2: the moves themselves.
    pool.parallel_for(movers.size(), [&](size_t i, unsigned w) {
      vertex_id v = movers[i];
      if (!moved_[v]) {
        moved_[v] = 1;
        batch_old_[v] = l;
        stage[w].first_movers.push_back(v);
      }
      slots_[v].level.store(l + 1, std::memory_order_seq_cst);
    });

    // Phase 3: neighbors absorb the moves. Only vertices landing exactly at
    // the movers' new level gain up-degree, so fresh violations appear at
    // level l+1 only, which the loop has not visited yet.
    pool.parallel_for(movers.size(), [&](size_t i, unsigned w) {
      vertex_id v = movers[i];
      for (vertex_id u : g.neighbors(v)) {
        locks_[u].lock();
        auto& nl = nbr_levels_[u];
        auto it = nl.find(l);
        if (--it->second == 0) nl.erase(it);
        ++nl[l + 1];
        locks_[u].unlock();
        if (round_[u].load(std::memory_order_relaxed) == round) continue;
        uint32_t lu = level(u);
        if (lu == l + 1) {
          int32_t d = up_[u].fetch_add(1, std::memory_order_relaxed) + 1;
          if (d > bound1_[params_.group_of(lu)] + kBoundGuard &&
              try_claim(queued_[u]))
            stage[w].enqueued.emplace_back(u, lu);
        } else if (lu == l + 2) {
          upstar_[u].fetch_add(1, std::memory_order_relaxed);
        }
      }
    });

    // Phase 4: movers recount themselves at their new level.
    pool.parallel_for(movers.size(), [&](size_t i, unsigned w) {
      vertex_id v = movers[i];
      recompute_self(v);
      if (inv1_violated(v) && try_claim(queued_[v]))
        stage[w].enqueued.emplace_back(v, l + 1);
    });

    for (auto& s : stage) {
      for (auto [v, t] : s.enqueued) {
        enqueue(buckets, v, t);
        hi = std::max(hi, t);
      }
      s.enqueued.clear();
      first_movers.insert(first_movers.end(), s.first_movers.begin(),
                          s.first_movers.end());
      s.first_movers.clear();
    }
    rep.total_moves += movers.size();
    if (eh && eh->after_level) eh->after_level(l);
  }

  rep.movers.reserve(first_movers.size());
  for (vertex_id v : first_movers) {
    rep.movers.push_back({v, batch_old_[v], level(v)});
    moved_[v] = 0;
  }
  return rep;
}

MoveReport LevelState::batch_delete(const Graph& g, const EdgeBatch& b,
                                    UpdateHooks& hooks, WorkerPool& pool,
                                    EngineHooks* eh) {
  MoveReport rep;
  if (b.edges.empty()) return rep;
  const uint32_t K = params_.num_levels;
  const unsigned W = pool.workers();
  std::vector<Staging> stage(W);
  std::vector<std::vector<vertex_id>> buckets(K);
  std::set<uint32_t> pending;
  std::vector<vertex_id> first_movers;

  pool.parallel_for(b.edges.size(), [&](size_t i, unsigned) {
    const Edge& e = b.edges[i];
    uint32_t lu = level(e.u), lv = level(e.v);
    auto lose = [&](vertex_id a, uint32_t la, uint32_t other_l) {
      locks_[a].lock();
      auto& nl = nbr_levels_[a];
      auto it = nl.find(other_l);
      if (--it->second == 0) nl.erase(it);
      locks_[a].unlock();
      if (other_l >= la) up_[a].fetch_sub(1, std::memory_order_relaxed);
      if (other_l + 1 >= la) upstar_[a].fetch_sub(1, std::memory_order_relaxed);
    };
    lose(e.u, lu, lv);
    lose(e.v, lv, lu);
  });

  pool.parallel_for(b.edges.size(), [&](size_t i, unsigned w) {
    const Edge& e = b.edges[i];
    for (vertex_id v : {e.u, e.v})
      if (inv2_violated(v) && try_claim(queued_[v]))
        stage[w].enqueued.emplace_back(v, desire_level_unchecked(v));
  });
  for (auto& s : stage) {
    for (auto [v, t] : s.enqueued) {
      enqueue(buckets, v, t);
      pending.insert(t);
    }
    s.enqueued.clear();
  }

  std::vector<vertex_id> movers;
  std::vector<uint32_t> mover_old;
  std::vector<vertex_id> affected;
  while (!pending.empty()) {
    const uint32_t dl = *pending.begin();
    pending.erase(pending.begin());
    auto& bucket = buckets[dl];
    movers.clear();
    mover_old.clear();
    for (vertex_id v : bucket) {
      queued_[v].store(0, std::memory_order_relaxed);
      if (!inv2_violated(v)) continue;
      uint32_t d = desire_level_unchecked(v);
      if (d == dl) {
        movers.push_back(v);
        mover_old.push_back(level(v));
      } else {
        // Desire drifted since enqueue (neighbors kept falling); requeue.
        queued_[v].store(1, std::memory_order_relaxed);
        enqueue(buckets, v, d);
        pending.insert(d);
      }
    }
    bucket.clear();
    if (movers.empty()) continue;

    const uint32_t round = ++round_counter_;
    for (vertex_id v : movers) round_[v].store(round, std::memory_order_relaxed);

    pool.parallel_for(movers.size(), [&](size_t i, unsigned) {
      vertex_id v = movers[i];
      uint32_t lv = mover_old[i];
      std::vector<vertex_id> triggers;
      if (lv >= 2)
        for (vertex_id w : g.neighbors(v))
          if (level(w) + 1 < lv && hooks.is_marked(w)) triggers.push_back(w);
      if (!hooks.is_marked(v))
        hooks.mark(v, triggers);
      else
        for (vertex_id w : triggers) hooks.merge(v, w);
    });

    pool.parallel_for(movers.size(), [&](size_t i, unsigned w) {
      vertex_id v = movers[i];
      if (!moved_[v]) {
        moved_[v] = 1;
        batch_old_[v] = mover_old[i];
        stage[w].first_movers.push_back(v);
      }
      slots_[v].level.store(dl, std::memory_order_seq_cst);
    });

    pool.parallel_for(movers.size(), [&](size_t i, unsigned w) {
      vertex_id v = movers[i];
      uint32_t lv = mover_old[i];
      for (vertex_id u : g.neighbors(v)) {
        locks_[u].lock();
        auto& nl = nbr_levels_[u];
        auto it = nl.find(lv);
        if (--it->second == 0) nl.erase(it);
        ++nl[dl];
        locks_[u].unlock();
        if (round_[u].load(std::memory_order_relaxed) == round) continue;
        uint32_t lu = level(u);
        if (lu > dl && lu <= lv)
          up_[u].fetch_sub(1, std::memory_order_relaxed);
        if (lu > dl + 1 && lu <= lv + 1) {
          upstar_[u].fetch_sub(1, std::memory_order_relaxed);
          // Losing up*-degree can break invariant 2; recheck after the
          // barrier once u's bookkeeping is final for this round.
          uint32_t seen = affected_[u].load(std::memory_order_relaxed);
          while (seen != round) {
            if (affected_[u].compare_exchange_weak(seen, round,
                                                   std::memory_order_relaxed)) {
              stage[w].affected.push_back(u);
              break;
            }
          }
        }
      }
    });

    affected.clear();
    for (auto& s : stage) {
      affected.insert(affected.end(), s.affected.begin(), s.affected.end());
      s.affected.clear();
    }
    pool.parallel_for(affected.size(), [&](size_t i, unsigned w) {
      vertex_id u = affected[i];
      if (inv2_violated(u) && try_claim(queued_[u]))
        stage[w].enqueued.emplace_back(u, desire_level_unchecked(u));
    });

    pool.parallel_for(movers.size(), [&](size_t i, unsigned w) {
      vertex_id v = movers[i];
      recompute_self(v);
      if (inv2_violated(v) && try_claim(queued_[v]))
        stage[w].enqueued.emplace_back(v, desire_level_unchecked(v));
    });

    for (auto& s : stage) {
      for (auto [v, t] : s.enqueued) {
        enqueue(buckets, v, t);
        pending.insert(t);
      }
      s.enqueued.clear();
      first_movers.insert(first_movers.end(), s.first_movers.begin(),
                          s.first_movers.end());
      s.first_movers.clear();
    }
    rep.total_moves += movers.size();
    if (eh && eh->after_level) eh->after_level(dl);
  }

  rep.movers.reserve(first_movers.size());
  for (vertex_id v : first_movers) {
    rep.movers.push_back({v, batch_old_[v], level(v)});
    moved_[v] = 0;
  }
  return rep;
}

void LevelState::rebuild_bookkeeping(const Graph& g) {
  for (vertex_id v = 0; v < n_; ++v) {
    uint32_t l = level(v);
    int64_t up = 0, upstar = 0;
    nbr_levels_[v].clear();
    for (vertex_id w : g.neighbors(v)) {
      uint32_t lw = level(w);
      ++nbr_levels_[v][lw];
      if (lw >= l) ++up;
      if (lw + 1 >= l) ++upstar;
    }
    up_[v].store(static_cast<int32_t>(up), std::memory_order_relaxed);
    upstar_[v].store(static_cast<int32_t>(upstar), std::memory_order_relaxed);
  }
}

std::vector<std::string> LevelState::verify_bookkeeping(const Graph& g) const {
  std::vector<std::string> out;
  for (vertex_id v = 0; v < n_; ++v) {
    uint32_t l = level(v);
    int64_t up = 0, upstar = 0;
    std::map<uint32_t, uint32_t> counts;
    for (vertex_id w : g.neighbors(v)) {
      uint32_t lw = level(w);
      ++counts[lw];
      if (lw >= l) ++up;
      if (lw + 1 >= l) ++upstar;
    }
    auto complain = [&](const char* what, int64_t want, int64_t got) {
      std::ostringstream os;
      os << "vertex " << v << ": " << what << " expected " << want << " got "
         << got;
      out.push_back(os.str());
    };
    if (up != up_[v].load(std::memory_order_relaxed))
      complain("up-degree", up, up_[v].load(std::memory_order_relaxed));
    if (upstar != upstar_[v].load(std::memory_order_relaxed))
      complain("up*-degree", upstar,
               upstar_[v].load(std::memory_order_relaxed));
    if (counts != nbr_levels_[v]) {
      std::ostringstream os;
      os << "vertex " << v << ": neighbor-level counts diverge from recount";
      out.push_back(os.str());
    }
  }
  return out;
}

namespace {

struct DescriptorHooks final : UpdateHooks {
  explicit DescriptorHooks(DescriptorTable& t) : table(t) {}
  bool is_marked(vertex_id v) const override { return table.is_marked(v); }
  void mark(vertex_id v, std::span<const vertex_id> triggers) override {
    table.mark(v, triggers);
  }
  void merge(vertex_id v, vertex_id w) override { table.merge(v, w); }
  DescriptorTable& table;
};

}  // namespace

Cplds::Cplds(vertex_id n, LevelParams params, unsigned update_workers,
             Mode mode)
    : graph_(n),
      levels_(n, params),
      descriptors_(n, levels_.slots()),
      pool_(update_workers),
      mode_(mode) {
  if (mode_ == Mode::Synchronized)
    hooks_ = std::make_unique<DescriptorHooks>(descriptors_);
  else
    hooks_ = std::make_unique<UpdateHooks>();
}

BatchResult Cplds::apply(const EdgeBatch& batch, EngineHooks* hooks) {
  BatchResult result;
  result.batch_id = descriptors_.begin_batch();
  graph_.apply_batch(batch);
  if (mode_ == Mode::Synchronized) descriptors_.set_batch_edges(batch.edges);
  MoveReport rep =
      batch.kind == BatchKind::Insert
          ? levels_.batch_insert(graph_, batch, *hooks_, pool_, hooks)
          : levels_.batch_delete(graph_, batch, *hooks_, pool_, hooks);
  result.total_moves = rep.total_moves;
  result.movers.reserve(rep.movers.size());
  std::vector<vertex_id> marked;
  marked.reserve(rep.movers.size());
  for (const Mover& m : rep.movers) {
    vertex_id root =
        mode_ == Mode::Synchronized ? descriptors_.find(m.v) : m.v;
    result.movers.push_back({m.v, m.old_level, m.new_level, root});
    marked.push_back(m.v);
  }
  if (hooks && hooks->before_unmark) hooks->before_unmark();
  if (mode_ == Mode::Synchronized)
    descriptors_.unmark_all(pool_, marked,
                            hooks ? hooks->between_unmark_phases
                                  : std::function<void()>{});
  if (hooks && hooks->after_unmark) hooks->after_unmark();
  return result;
}

ReadResult Cplds::read_level(vertex_id v, ReadHooks* hooks) {
  ReadResult r;
  for (;;) {
    uint64_t b1 = descriptors_.batch_number();
    if (hooks && hooks->after_batch_read1) hooks->after_batch_read1();
    uint32_t l1 = levels_.level(v);
    if (hooks && hooks->after_level_read1) hooks->after_level_read1();
    DescriptorTable::word d = descriptors_.snapshot(v);
    if (hooks && hooks->after_desc_read) hooks->after_desc_read();
    DagStatus s = descriptors_.check_dag(d, v);
    if (hooks && hooks->after_check_dag) hooks->after_check_dag();
    uint32_t l2 = levels_.level(v);
    if (hooks && hooks->after_level_read2) hooks->after_level_read2();
    uint64_t b2 = descriptors_.batch_number();
    if (hooks && hooks->after_batch_read2) hooks->after_batch_read2();
    if (b1 == b2) {
      if (s == DagStatus::Marked) {
        r.level = descriptors_.old_level(v);
        return r;
      }
      if (l1 == l2) {
        r.level = l1;
        return r;
      }
    }
    ++r.retries;
  }
}

}  // namespace cplds
