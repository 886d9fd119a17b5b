#include "cplds/history.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace cplds {

namespace {

const char* mode_name(ReadModeTag m) {
  switch (m) {
    case ReadModeTag::Cplds: return "cplds";
    case ReadModeTag::Sync: return "sync";
    case ReadModeTag::NonSync: return "nonsync";
  }
  return "?";
}

ReadModeTag parse_mode(const std::string& s, size_t line) {
  if (s == "cplds") return ReadModeTag::Cplds;
  if (s == "sync") return ReadModeTag::Sync;
  if (s == "nonsync") return ReadModeTag::NonSync;
  throw std::runtime_error("history line " + std::to_string(line) +
                           ": unknown read mode '" + s + "'");
}

[[noreturn]] void bad_line(size_t line, const std::string& what) {
  throw std::runtime_error("history line " + std::to_string(line) + ": " +
                           what);
}

}  // namespace

void save_history(std::ostream& out, const History& h) {
  out << "H\t" << h.n << "\n";
  for (const BatchRecord& b : h.batches) {
    out << "B\t" << b.batch_id << "\t" << b.begin_ts << "\t" << b.end_ts
        << "\n";
    for (const MoverRecord& m : b.movers)
      out << "M\t" << b.batch_id << "\t" << m.v << "\t" << m.old_level << "\t"
          << m.new_level << "\t" << m.dag_root << "\n";
  }
  for (const ReadRecord& r : h.reads)
    out << "R\t" << r.vertex << "\t" << r.invoke_ts << "\t" << r.return_ts
        << "\t" << r.returned_level << "\t" << mode_name(r.mode) << "\n";
}

void save_history_file(const std::string& path, const History& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_history(out, h);
  if (!out) throw std::runtime_error("write failure on " + path);
}

History load_history(std::istream& in) {
  History h;
  std::string line;
  size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "H") {
      if (saw_header) bad_line(lineno, "duplicate header");
      if (!(is >> h.n)) bad_line(lineno, "malformed header");
      saw_header = true;
    } else if (tag == "B") {
      BatchRecord b;
      if (!(is >> b.batch_id >> b.begin_ts >> b.end_ts))
        bad_line(lineno, "malformed batch record");
      h.batches.push_back(b);
    } else if (tag == "M") {
      uint64_t bid;
      MoverRecord m;
      if (!(is >> bid >> m.v >> m.old_level >> m.new_level >> m.dag_root))
        bad_line(lineno, "malformed mover record");
      if (h.batches.empty() || h.batches.back().batch_id != bid)
        bad_line(lineno, "mover record outside its batch");
      h.batches.back().movers.push_back(m);
    } else if (tag == "R") {
      ReadRecord r;
      std::string mode;
      if (!(is >> r.vertex >> r.invoke_ts >> r.return_ts >> r.returned_level >>
            mode))
        bad_line(lineno, "malformed read record");
      r.mode = parse_mode(mode, lineno);
      h.reads.push_back(r);
    } else {
      bad_line(lineno, "unknown record tag '" + tag + "'");
    }
    std::string rest;
    if (is >> rest) bad_line(lineno, "trailing fields");
  }
  if (!saw_header) throw std::runtime_error("history: missing header");
  return h;
}

History load_history_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_history(in);
}

namespace {

struct Change {
  size_t batch_index;
  uint32_t old_level;
  uint32_t new_level;
  vertex_id dag_root;
};

// Per-vertex level-change timelines, validated.
struct Timeline {
  std::unordered_map<vertex_id, std::vector<Change>> changes;

  uint32_t level_before(vertex_id v, size_t batch_index) const {
    auto it = changes.find(v);
    if (it == changes.end()) return 0;
    uint32_t l = 0;
    for (const Change& c : it->second) {
      if (c.batch_index >= batch_index) break;
      l = c.new_level;
    }
    return l;
  }
  uint32_t level_after(vertex_id v, size_t batch_index) const {
    auto it = changes.find(v);
    if (it == changes.end()) return 0;
    uint32_t l = 0;
    for (const Change& c : it->second) {
      if (c.batch_index > batch_index) break;
      l = c.new_level;
    }
    return l;
  }
  const Change* change_at(vertex_id v, size_t batch_index) const {
    auto it = changes.find(v);
    if (it == changes.end()) return nullptr;
    for (const Change& c : it->second)
      if (c.batch_index == batch_index) return &c;
    return nullptr;
  }
};

void validate(const History& h) {
  for (size_t i = 0; i < h.batches.size(); ++i) {
    const BatchRecord& b = h.batches[i];
    if (b.begin_ts >= b.end_ts)
      throw std::runtime_error("batch " + std::to_string(b.batch_id) +
                               ": begin_ts >= end_ts");
    if (i > 0 && h.batches[i - 1].end_ts > b.begin_ts)
      throw std::runtime_error("batches overlap or are out of order");
    std::unordered_set<vertex_id> seen;
    for (const MoverRecord& m : b.movers) {
      if (m.v >= h.n || m.dag_root >= h.n)
        throw std::runtime_error("mover vertex out of range");
      if (m.old_level == m.new_level)
        throw std::runtime_error("mover with old_level == new_level");
      if (!seen.insert(m.v).second)
        throw std::runtime_error("vertex recorded twice in one batch");
    }
  }
  for (const ReadRecord& r : h.reads) {
    if (r.vertex >= h.n) throw std::runtime_error("read vertex out of range");
    if (r.invoke_ts >= r.return_ts)
      throw std::runtime_error("read with invoke_ts >= return_ts");
  }
}

Timeline build_timeline(const History& h, std::vector<std::string>& out) {
  Timeline t;
  for (size_t i = 0; i < h.batches.size(); ++i)
    for (const MoverRecord& m : h.batches[i].movers)
      t.changes[m.v].push_back({i, m.old_level, m.new_level, m.dag_root});
  for (auto& [v, cs] : t.changes) {
    uint32_t prev = 0;
    for (const Change& c : cs) {
      if (c.old_level != prev) {
        std::ostringstream os;
        os << "vertex " << v << ": level chain broken at batch "
           << h.batches[c.batch_index].batch_id << " (recorded old "
           << c.old_level << ", expected " << prev << ")";
        out.push_back(os.str());
      }
      prev = c.new_level;
    }
  }
  return t;
}

}  // namespace

std::vector<std::string> check_history(const History& h) {
  validate(h);
  std::vector<std::string> out;
  Timeline t = build_timeline(h, out);

  const size_t nb = h.batches.size();
  std::vector<uint64_t> begins(nb);
  for (size_t i = 0; i < nb; ++i) begins[i] = h.batches[i].begin_ts;

  // (batch, dag_root) -> earliest return of a read that saw a NEW level.
  std::map<std::pair<size_t, vertex_id>, uint64_t> first_new_return;
  struct OldRead {
    size_t read_index;
    size_t batch_index;
    vertex_id dag_root;
    uint64_t invoke_ts;
  };
  std::vector<OldRead> old_reads;

  for (size_t ri = 0; ri < h.reads.size(); ++ri) {
    const ReadRecord& r = h.reads[ri];
    // Overlapping batches: begin <= return and end >= invoke.
    size_t lo = 0, hi_excl = 0;
    {
      auto it = std::upper_bound(begins.begin(), begins.end(), r.return_ts);
      hi_excl = static_cast<size_t>(it - begins.begin());
      size_t i = hi_excl;
      while (i > 0 && h.batches[i - 1].end_ts >= r.invoke_ts) --i;
      lo = i;
    }
    bool ok = false;
    if (lo == hi_excl) {
      // No overlap: the level at invoke time is the only acceptable value.
      size_t j = lo;  // first batch beginning after the read
      uint32_t stable = j == 0 ? (t.changes.count(r.vertex)
                                      ? t.level_before(r.vertex, 0)
                                      : 0)
                               : t.level_after(r.vertex, j - 1);
      ok = r.returned_level == stable;
    } else {
      for (size_t i = lo; i < hi_excl && !ok; ++i) {
        if (r.returned_level == t.level_before(r.vertex, i) ||
            r.returned_level == t.level_after(r.vertex, i))
          ok = true;
      }
    }
    if (!ok) {
      std::ostringstream os;
      os << "read #" << ri << " of vertex " << r.vertex << " returned level "
         << r.returned_level
         << ", not a boundary value of any overlapping batch";
      out.push_back(os.str());
      continue;
    }
    // DAG-inversion bookkeeping: only reads attributable to exactly one
    // batch classify unambiguously as OLD or NEW.
    if (hi_excl - lo != 1) continue;
    size_t bi = lo;
    const Change* c = t.change_at(r.vertex, bi);
    if (!c || c->old_level == c->new_level) continue;
    if (r.returned_level == c->new_level &&
        r.returned_level != c->old_level) {
      auto key = std::make_pair(bi, c->dag_root);
      auto [it, inserted] = first_new_return.try_emplace(key, r.return_ts);
      if (!inserted) it->second = std::min(it->second, r.return_ts);
    } else if (r.returned_level == c->old_level &&
               r.returned_level != c->new_level) {
      old_reads.push_back({ri, bi, c->dag_root, r.invoke_ts});
    }
  }

  for (const OldRead& o : old_reads) {
    auto it = first_new_return.find({o.batch_index, o.dag_root});
    if (it != first_new_return.end() && o.invoke_ts > it->second) {
      std::ostringstream os;
      os << "read #" << o.read_index << " saw an old level of DAG root "
         << o.dag_root << " in batch "
         << h.batches[o.batch_index].batch_id
         << " after a read of the same DAG returned a new level";
      out.push_back(os.str());
    }
  }
  return out;
}

bool linearizable_micro(const History& h) {
  validate(h);

  struct Op {
    uint64_t invoke_ts, return_ts;
    bool is_read;
    vertex_id vertex = 0;        // read only
    uint32_t returned_level = 0;
    std::vector<MoverRecord> effect;  // commit only
  };
  std::vector<Op> ops;
  for (const BatchRecord& b : h.batches) {
    std::map<vertex_id, std::vector<MoverRecord>> dags;
    for (const MoverRecord& m : b.movers) dags[m.dag_root].push_back(m);
    for (auto& [root, movers] : dags)
      ops.push_back({b.begin_ts, b.end_ts, false, 0, 0, std::move(movers)});
  }
  for (const ReadRecord& r : h.reads)
    ops.push_back(
        {r.invoke_ts, r.return_ts, true, r.vertex, r.returned_level, {}});
  if (ops.size() > 24)
    throw std::invalid_argument("linearizable_micro: history too large");
  const uint32_t full = ops.size() >= 32 ? ~0u
                                         : (1u << ops.size()) - 1;

  std::unordered_map<vertex_id, uint32_t> level;
  auto level_of = [&](vertex_id v) {
    auto it = level.find(v);
    return it == level.end() ? 0u : it->second;
  };

  std::unordered_set<uint32_t> dead;
  auto dfs = [&](auto&& self, uint32_t mask) -> bool {
    if (mask == full) return true;
    if (dead.count(mask)) return false;
    for (size_t i = 0; i < ops.size(); ++i) {
      if (mask & (1u << i)) continue;
      const Op& o = ops[i];
      bool enabled = true;
      for (size_t j = 0; j < ops.size() && enabled; ++j)
        if (j != i && !(mask & (1u << j)) && ops[j].return_ts < o.invoke_ts)
          enabled = false;
      if (!enabled) continue;
      if (o.is_read) {
        if (level_of(o.vertex) != o.returned_level) continue;
        if (self(self, mask | (1u << i))) return true;
      } else {
        for (const MoverRecord& m : o.effect) level[m.v] = m.new_level;
        if (self(self, mask | (1u << i))) return true;
        for (const MoverRecord& m : o.effect) level[m.v] = m.old_level;
      }
    }
    dead.insert(mask);
    return false;
  };
  return dfs(dfs, 0);
}

}  // namespace cplds
