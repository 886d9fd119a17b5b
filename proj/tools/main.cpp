#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cplds/bench.hpp"
#include "cplds/engine.hpp"
#include "cplds/graph.hpp"
#include "cplds/history.hpp"
#include "cplds/oracle.hpp"
#include "cplds/params.hpp"

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct CommonFlags {
  std::string source;
  double delta = 0.2;
  double lambda = 9.0;
  size_t batch_size = 10000;
  unsigned update_threads = 2;
  unsigned read_threads = 1;
  uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--graph,--source", f.source,
                  "edge-list file or generator spec (gnp:n:m, climb:c:s, "
                  "climbmix:n:m:c)")
      ->required();
  cmd->add_option("--delta", f.delta, "approximation knob (default 0.2)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", f.lambda, "approximation knob (default 9)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", f.batch_size, "edges per update batch")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--update-threads", f.update_threads, "update worker count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--read-threads", f.read_threads, "reader thread count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "rng seed (all randomness flows from it)");
}

cplds::ReadModeTag parse_mode(const std::string& s) {
  if (s == "cplds") return cplds::ReadModeTag::Cplds;
  if (s == "sync") return cplds::ReadModeTag::Sync;
  if (s == "nonsync") return cplds::ReadModeTag::NonSync;
  throw CLI::ValidationError("--mode", "must be cplds, sync, nonsync, or all");
}

int cmd_bench(const CommonFlags& f, const std::string& mode,
              const std::string& output, const std::string& record,
              bool mirror, size_t snapshot_every, uint64_t read_gap_ns) {
  std::vector<cplds::ReadModeTag> modes;
  if (mode == "all")
    modes = {cplds::ReadModeTag::Cplds, cplds::ReadModeTag::Sync,
             cplds::ReadModeTag::NonSync};
  else
    modes = {parse_mode(mode)};

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) {
      std::cerr << "cannot open " << output << " for writing\n";
      return kExitIo;
    }
    out = &file;
  }
  cplds::write_csv_header(*out);
  for (cplds::ReadModeTag m : modes) {
    cplds::RunConfig cfg;
    cfg.source = f.source;
    cfg.batch_size = f.batch_size;
    cfg.update_workers = f.update_threads;
    cfg.readers = f.read_threads;
    cfg.mode = m;
    cfg.delta = f.delta;
    cfg.lambda = f.lambda;
    cfg.seed = f.seed;
    cfg.mirror_delete = mirror;
    cfg.record = true;  // per-read error columns need the full history
    cfg.snapshot_every = snapshot_every;
    cfg.read_gap_ns = read_gap_ns;
    cplds::MetricsReport rep = cplds::run(cfg);
    cplds::write_csv_row(*out, rep);
    if (!record.empty())
      cplds::save_history_file(record + "." + rep.mode + ".hist", rep.history);
  }
  return 0;
}

int cmd_exact(const std::string& source, bool histogram, uint64_t seed) {
  cplds::Stream stream = cplds::make_stream(source, seed);
  cplds::Graph g(stream.n);
  cplds::EdgeBatch all{cplds::BatchKind::Insert, stream.edges};
  g.apply_batch(all);
  cplds::CorenessMap core = cplds::exact_coreness(g);
  if (histogram) {
    std::map<uint32_t, size_t> hist;
    for (uint32_t k : core) ++hist[k];
    for (auto [k, count] : hist) std::cout << k << ' ' << count << '\n';
  } else {
    for (size_t v = 0; v < core.size(); ++v)
      std::cout << core[v] << (v + 1 == core.size() ? '\n' : ' ');
  }
  uint32_t max_k = 0;
  for (uint32_t k : core) max_k = std::max(max_k, k);
  std::cerr << "max k = " << max_k << '\n';
  return 0;
}

int cmd_audit(const CommonFlags& f, bool mirror, bool inject_fault) {
  cplds::Stream stream = cplds::make_stream(f.source, f.seed);
  std::vector<cplds::EdgeBatch> batches =
      cplds::gen_workload(stream.edges, f.batch_size, mirror);
  cplds::LevelParams params = cplds::make_params(
      std::max<uint64_t>(stream.n, 2), f.delta, f.lambda);
  std::cerr << "bound threshold = " << params.theoretical_factor << '\n';
  cplds::Cplds s(stream.n, params, f.update_threads,
                 cplds::Cplds::Mode::Synchronized);
  size_t violations = 0;
  for (size_t i = 0; i < batches.size(); ++i) {
    s.apply(batches[i]);
    if (inject_fault && i + 1 == batches.size() && stream.n > 0)
      s.levels().debug_set_level(0, params.num_levels - 1);
    for (const std::string& v : cplds::audit_lds(s.graph(), s.levels())) {
      std::cerr << "batch " << i + 1 << ": " << v << '\n';
      ++violations;
    }
    for (const std::string& v : s.levels().verify_bookkeeping(s.graph())) {
      std::cerr << "batch " << i + 1 << ": bookkeeping: " << v << '\n';
      ++violations;
    }
    cplds::CorenessMap exact = cplds::exact_coreness(s.graph());
    std::vector<double> est(stream.n);
    for (cplds::vertex_id v = 0; v < stream.n; ++v)
      est[v] = s.estimate_of_level(s.live_level(v));
    cplds::BoundReport br =
        cplds::check_bound(est, exact, params.theoretical_factor);
    if (!br.offenders.empty()) {
      std::cerr << "batch " << i + 1 << ": bound exceeded, max ratio "
                << br.max_ratio << " over " << br.offenders.size()
                << " vertices\n";
      ++violations;
    }
  }
  if (violations > 0) {
    std::cerr << violations << " violation(s)\n";
    return kExitViolation;
  }
  std::cerr << "audit clean over " << batches.size() << " batches\n";
  return 0;
}

int cmd_lincheck(const CommonFlags& f, const std::string& history_path,
                 const std::string& mode, bool mirror) {
  cplds::History h;
  if (!history_path.empty()) {
    h = cplds::load_history_file(history_path);
  } else {
    cplds::RunConfig cfg;
    cfg.source = f.source;
    cfg.batch_size = f.batch_size;
    cfg.update_workers = f.update_threads;
    cfg.readers = f.read_threads;
    cfg.mode = parse_mode(mode);
    cfg.delta = f.delta;
    cfg.lambda = f.lambda;
    cfg.seed = f.seed;
    cfg.mirror_delete = mirror;
    cfg.record = true;
    h = cplds::run(cfg).history;
  }
  std::vector<std::string> violations = cplds::check_history(h);
  for (const std::string& v : violations) std::cerr << v << '\n';
  if (!violations.empty()) {
    std::cerr << violations.size() << " violation(s) over " << h.reads.size()
              << " reads\n";
    return kExitViolation;
  }
  std::cerr << "history consistent: " << h.reads.size() << " reads, "
            << h.batches.size() << " batches\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent parallel level data structure: approximate k-core "
               "over dynamic graphs with linearizable asynchronous reads"};
  app.require_subcommand(1);

  CommonFlags bench_f;
  std::string bench_mode = "cplds", bench_out, bench_record;
  bool bench_mirror = false;
  size_t bench_snapshot = 1;
  uint64_t bench_gap = 0;
  CLI::App* bench = app.add_subcommand("bench", "run a benchmark, emit CSV");
  add_common(bench, bench_f);
  bench->add_option("--mode", bench_mode, "cplds | sync | nonsync | all");
  bench->add_option("--output", bench_out, "CSV path (default stdout)");
  bench->add_option("--record", bench_record,
                    "history file prefix (one file per mode)");
  bench->add_flag("--mirror", bench_mirror, "append a mirrored delete phase");
  bench->add_option("--snapshot-every", bench_snapshot,
                    "exact-coreness snapshot stride")
      ->check(CLI::PositiveNumber);
  bench->add_option("--read-gap", bench_gap,
                    "min nanoseconds between reads per reader");

  std::string exact_source;
  uint64_t exact_seed = 1;
  bool exact_hist = false;
  CLI::App* exact = app.add_subcommand("exact", "exact coreness via peeling");
  exact->add_option("--graph,--source", exact_source, "edge-list file or spec")
      ->required();
  exact->add_flag("--histogram", exact_hist, "print 'k count' lines instead");
  exact->add_option("--seed", exact_seed, "seed for generator specs");

  CommonFlags audit_f;
  bool audit_mirror = false, audit_fault = false;
  CLI::App* audit =
      app.add_subcommand("audit", "batched build with invariant audits");
  add_common(audit, audit_f);
  audit->add_flag("--mirror", audit_mirror, "append a mirrored delete phase");
  audit->add_flag("--inject-fault", audit_fault,
                  "corrupt one level before the final audit (self-test)");

  CommonFlags lin_f;
  std::string lin_history, lin_mode = "cplds";
  bool lin_mirror = false;
  CLI::App* lincheck =
      app.add_subcommand("lincheck", "linearizability history check");
  lincheck->add_option("--history", lin_history,
                       "existing history file to check");
  add_common(lincheck, lin_f);
  lincheck->get_option("--graph")->required(false);
  lincheck->add_option("--mode", lin_mode, "read mode for a recording run");
  lincheck->add_flag("--mirror", lin_mirror, "append a mirrored delete phase");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (bench->parsed())
      return cmd_bench(bench_f, bench_mode, bench_out, bench_record,
                       bench_mirror, bench_snapshot, bench_gap);
    if (exact->parsed()) return cmd_exact(exact_source, exact_hist, exact_seed);
    if (audit->parsed()) return cmd_audit(audit_f, audit_mirror, audit_fault);
    if (lincheck->parsed()) {
      if (lin_history.empty() && lin_f.source.empty()) {
        std::cerr << "lincheck needs --history or --graph\n";
        return kExitUsage;
      }
      return cmd_lincheck(lin_f, lin_history, lin_mode, lin_mirror);
    }
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return 0;
}
