#include "toploc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

namespace toploc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Removes tracked outputs unless commit() ran, so failures leave no partial
// files behind.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  void track(const std::string& path) { paths_.push_back(path); }
  void commit() { committed_ = true; }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VectorStore load_store(const std::string& path, bool normalize) {
  VectorStore store = read_vectors(path);
  if (normalize) return normalize_l2(store);
  return store;
}

[[noreturn]] void usage_error(const std::string& what) {
  throw std::invalid_argument(what);
}

EngineParams resolve_params(const RunArgs& args, Mode mode) {
  EngineParams prm;
  prm.k = args.k;
  if (prm.k == 0) usage_error("k must be >= 1");
  switch (mode) {
    case Mode::exact:
      break;
    case Mode::ivf:
      if (!args.np) usage_error("mode ivf requires --np");
      prm.np = *args.np;
      break;
    case Mode::toploc_ivf:
      if (!args.np || !args.h) usage_error("mode toploc-ivf requires --np and --h");
      prm.np = *args.np;
      prm.h = *args.h;
      prm.alpha = 0.0;
      break;
    case Mode::toploc_ivf_plus:
      if (!args.np || !args.h || !args.alpha) {
        usage_error("mode toploc-ivf-plus requires --np, --h and --alpha");
      }
      prm.np = *args.np;
      prm.h = *args.h;
      prm.alpha = *args.alpha;
      break;
    case Mode::hnsw:
      if (!args.ef) usage_error("mode hnsw requires --ef");
      prm.ef = *args.ef;
      break;
    case Mode::toploc_hnsw:
      if (!args.ef || !args.up) usage_error("mode toploc-hnsw requires --ef and --up");
      prm.ef = *args.ef;
      prm.up = *args.up;
      break;
  }
  return prm;
}

json config_json(const RunArgs& args, Mode mode, const EngineParams& prm) {
  json cfg{{"mode", mode_name(mode)},
           {"vectors", args.vectors},
           {"queries", args.queries},
           {"conversations", args.conversations},
           {"normalize", args.normalize},
           {"single_thread", args.single_thread},
           {"batch_size", args.batch_size},
           {"k", prm.k},
           {"tag", args.tag}};
  if (!args.index.empty()) cfg["index"] = args.index;
  switch (mode) {
    case Mode::exact:
      break;
    case Mode::ivf:
      cfg["np"] = prm.np;
      break;
    case Mode::toploc_ivf:
      cfg["np"] = prm.np;
      cfg["h"] = prm.h;
      break;
    case Mode::toploc_ivf_plus:
      cfg["np"] = prm.np;
      cfg["h"] = prm.h;
      cfg["alpha"] = prm.alpha;
      break;
    case Mode::hnsw:
      cfg["ef"] = prm.ef;
      break;
    case Mode::toploc_hnsw:
      cfg["ef"] = prm.ef;
      cfg["up"] = prm.up;
      break;
  }
  return cfg;
}

// Heap-owned state so the Engine's borrowed pointers survive moves.
struct LoadedEngine {
  std::unique_ptr<VectorStore> store;
  std::unique_ptr<IvfIndex> ivf;
  std::unique_ptr<HnswGraph> hnsw;
  Engine engine;
};

LoadedEngine load_engine(const RunArgs& args, Mode mode, const EngineParams& prm) {
  const bool needs_index = mode != Mode::exact;
  if (needs_index && args.index.empty()) {
    usage_error("mode " + mode_name(mode) + " requires --index");
  }
  LoadedEngine le;
  le.store = std::make_unique<VectorStore>(load_store(args.vectors, args.normalize));
  le.engine.mode = mode;
  le.engine.params = prm;
  le.engine.store = le.store.get();
  switch (mode) {
    case Mode::exact:
      break;
    case Mode::ivf:
    case Mode::toploc_ivf:
    case Mode::toploc_ivf_plus:
      le.ivf = std::make_unique<IvfIndex>(load_ivf(args.index, *le.store));
      le.engine.ivf = le.ivf.get();
      break;
    case Mode::hnsw:
    case Mode::toploc_hnsw:
      le.hnsw = std::make_unique<HnswGraph>(load_hnsw(args.index, *le.store));
      le.engine.hnsw = le.hnsw.get();
      break;
  }
  return le;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

int fail(const std::string& what) {
  std::cerr << "error: " << what << "\n";
  return 1;
}

}  // namespace

int cmd_build(const BuildArgs& args) {
  OutputGuard guard;
  try {
    if (args.kind != "ivf" && args.kind != "hnsw") {
      usage_error("build kind must be 'ivf' or 'hnsw', got '" + args.kind + "'");
    }
    const VectorStore store = load_store(args.vectors, args.normalize);
    const auto t0 = std::chrono::steady_clock::now();
    guard.track(args.out);
    if (args.kind == "ivf") {
      if (args.p == 0 || args.p > store.size()) {
        usage_error("p (" + std::to_string(args.p) + ") must be in [1, " +
                    std::to_string(store.size()) + "]");
      }
      const IvfIndex index = build_ivf(store, args.p, args.max_iters, args.seed);
      save_ivf(index, args.out);
      std::size_t nonempty = 0;
      for (const auto& list : index.lists.lists) nonempty += list.empty() ? 0 : 1;
      std::cout << "built ivf index: n=" << store.size() << " d=" << store.dim()
                << " p=" << index.p() << " nonempty_lists=" << nonempty
                << " seconds=" << seconds_since(t0) << "\n";
    } else {
      const HnswGraph graph = build_hnsw(store, args.M, args.ef_construction, args.seed);
      save_hnsw(graph, args.out);
      std::cout << "built hnsw graph: n=" << store.size() << " d=" << store.dim()
                << " M=" << graph.M << " max_layer=" << graph.max_layer
                << " entry=" << graph.global_entry << " seconds=" << seconds_since(t0)
                << "\n";
    }
    guard.commit();
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_run(const RunArgs& args) {
  OutputGuard guard;
  try {
    const Mode mode = parse_mode(args.mode);
    const EngineParams prm = resolve_params(args, mode);
    if (args.run_out.empty() || args.report_out.empty()) {
      usage_error("run requires --run-out and --report-out");
    }

    const LoadedEngine le = load_engine(args, mode, prm);
    const VectorStore queries = read_vectors(args.queries);
    const auto conversations = read_conversations(args.conversations, queries);

    const HarnessResult result = run_conversations(le.engine, conversations, queries,
                                                   args.single_thread, args.batch_size);
    TimingReport timing = summarize_timing(result, mode, args.batch_size);

    if (!args.baseline_report.empty()) {
      std::ifstream bf(args.baseline_report);
      if (!bf) throw std::runtime_error("cannot open baseline report '" + args.baseline_report + "'");
      const json baseline = json::parse(bf);
      set_speedup(timing, baseline.at("method").get<std::string>(),
                  baseline.at("mean").at("time_ms").get<double>());
    }

    guard.track(args.run_out);
    guard.track(args.report_out);
    write_run(result.run, args.tag, args.run_out);
    json report = timing_report_json(timing, result);
    report["config"] = config_json(args, mode, prm);
    write_json_file(report, args.report_out);
    guard.commit();

    std::cout << "ran " << conversations.size() << " conversations, " << timing.turn_count
              << " turns: mean " << timing.mean_ms << " ms/turn, "
              << timing.mean_evals_per_turn << " evals/turn, refreshes "
              << result.refresh_count << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_sweep(const SweepArgs& args) {
  OutputGuard guard;
  try {
    static const std::vector<std::string> kParams{"np", "h", "alpha", "ef", "up", "k"};
    if (std::find(kParams.begin(), kParams.end(), args.param) == kParams.end()) {
      usage_error("unknown sweep parameter '" + args.param + "'");
    }
    if (args.values.empty()) usage_error("sweep requires a non-empty --values list");
    if (!std::is_sorted(args.values.begin(), args.values.end())) {
      usage_error("sweep values must be sorted ascending");
    }
    for (double v : args.values) {
      const double min_allowed = args.param == "alpha" ? 0.0 : 1.0;
      if (v < min_allowed) usage_error("sweep value " + std::to_string(v) + " out of range");
    }
    if (args.out_csv.empty()) usage_error("sweep requires --out");
    if (args.qrels.empty()) usage_error("sweep requires --qrels");

    const Mode mode = parse_mode(args.base.mode);
    EngineParams prm = resolve_params(args.base, mode);
    const LoadedEngine le = load_engine(args.base, mode, prm);
    const VectorStore queries = read_vectors(args.base.queries);
    const auto conversations = read_conversations(args.base.conversations, queries);
    const Qrels qrels = read_qrels(args.qrels);

    const std::size_t p = le.ivf ? le.ivf->p() : 0;
    std::vector<std::string> rows;
    for (double value : args.values) {
      EngineParams cur = prm;
      if (args.param == "np") cur.np = static_cast<std::size_t>(value);
      if (args.param == "h") cur.h = static_cast<std::size_t>(value);
      if (args.param == "alpha") cur.alpha = value;
      if (args.param == "ef") cur.ef = static_cast<std::size_t>(value);
      if (args.param == "up") cur.up = value;
      if (args.param == "k") cur.k = static_cast<std::size_t>(value);

      const bool ivf_mode = mode == Mode::ivf || mode == Mode::toploc_ivf ||
                            mode == Mode::toploc_ivf_plus;
      const bool session_ivf = mode == Mode::toploc_ivf || mode == Mode::toploc_ivf_plus;
      if (ivf_mode && cur.np > p) {
        std::cerr << "warning: skipping np=" << cur.np << " (> p=" << p << ")\n";
        continue;
      }
      if (session_ivf && (cur.h > p || cur.np > cur.h)) {
        std::cerr << "warning: skipping value " << value << " (need np <= h <= p)\n";
        continue;
      }
      const bool hnsw_mode = mode == Mode::hnsw || mode == Mode::toploc_hnsw;
      if (hnsw_mode && cur.ef < cur.k) {
        std::cerr << "warning: skipping ef=" << cur.ef << " (< k=" << cur.k << ")\n";
        continue;
      }

      Engine engine = le.engine;
      engine.params = cur;
      const HarnessResult result = run_conversations(engine, conversations, queries,
                                                     args.base.single_thread,
                                                     args.base.batch_size);
      const TimingReport timing = summarize_timing(result, mode, args.base.batch_size);
      const MetricsReport metrics = evaluate_run(result.run, qrels);

      char buf[256];
      std::snprintf(buf, sizeof(buf), "%g,%.6f,%llu,%.6f,%.6f,%.6f", value, timing.mean_ms,
                    static_cast<unsigned long long>(timing.total_evals), metrics.mean.mrr10,
                    metrics.mean.ndcg3, metrics.mean.ndcg10);
      rows.emplace_back(buf);
    }
    if (rows.empty()) usage_error("no sweep value was applicable");

    guard.track(args.out_csv);
    std::ofstream f(args.out_csv);
    if (!f) throw std::runtime_error("cannot open '" + args.out_csv + "' for writing");
    f << args.param << ",mean_time_ms,similarity_evals,mrr10,ndcg3,ndcg10\n";
    for (const auto& row : rows) f << row << '\n';
    if (!f) throw std::runtime_error("write failure on '" + args.out_csv + "'");
    f.close();
    guard.commit();
    std::cout << "wrote " << rows.size() << " sweep rows to " << args.out_csv << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_evaluate(const EvaluateArgs& args) {
  try {
    const RankedRun run = read_run(args.run);
    const Qrels qrels = read_qrels(args.qrels);
    const GainFunction gain =
        args.exponential_gain ? GainFunction::exponential : GainFunction::linear;
    const MetricsReport report = evaluate_run(run, qrels, gain);
    for (const auto& topic : report.missing_topics) {
      std::cerr << "warning: topic '" << topic << "' judged but absent from the run\n";
    }
    std::cout << metrics_report_json(report, "evaluate").dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int cmd_gen_synth(const GenSynthArgs& args) {
  OutputGuard guard;
  try {
    if (args.out_dir.empty()) usage_error("gen-synth requires --out-dir");
    fs::create_directories(args.out_dir);
    const SyntheticData data = gen_synthetic(args.spec);

    const auto path = [&](const char* name) { return (fs::path(args.out_dir) / name).string(); };
    const std::string corpus_path = path("corpus.tlvec");
    const std::string queries_path = path("queries.tlvec");
    const std::string convs_path = path("conversations.tsv");
    const std::string qrels_path = path("qrels.txt");
    for (const auto& p : {corpus_path, queries_path, convs_path, qrels_path}) guard.track(p);

    write_vectors(data.corpus, corpus_path);
    write_vectors(data.queries, queries_path);
    write_conversations(data.conversations, data.queries, convs_path);
    write_qrels(data.qrels, qrels_path);
    guard.commit();

    std::cout << "generated " << data.corpus.size() << " documents (d=" << args.spec.d
              << "), " << data.conversations.size() << " conversations x "
              << args.spec.turns_per_conversation << " turns into " << args.out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace toploc
