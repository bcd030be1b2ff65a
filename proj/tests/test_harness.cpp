#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "toploc/commands.hpp"
#include "toploc/harness.hpp"
#include "toploc/session.hpp"

using namespace toploc;
namespace fs = std::filesystem;

namespace {

struct Workload {
  SyntheticData data;
  IvfIndex ivf;
  HnswGraph hnsw;

  static Workload make(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n = 3000;
    spec.d = 16;
    spec.clusters = 12;
    spec.sigma = 0.2;
    spec.conversations = 12;
    spec.turns_per_conversation = 5;
    spec.drift = 0.05;
    spec.seed = seed;
    Workload w{gen_synthetic(spec), {}, {}};
    w.ivf = build_ivf(w.data.corpus, 64, 8, seed + 1);
    w.hnsw = build_hnsw(w.data.corpus, 8, 80, seed + 2);
    return w;
  }

  Engine engine(Mode mode) const {
    Engine e;
    e.mode = mode;
    e.store = &data.corpus;
    e.ivf = &ivf;
    e.hnsw = &hnsw;
    return e;
  }
};

struct TempDir {
  fs::path dir;
  explicit TempDir(const std::string& name) : dir(fs::path("/tmp") / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string operator/(const char* f) const { return (dir / f).string(); }
};

}  // namespace

TEST_CASE("run_conversations: exact mode scores perfectly on constructed qrels") {
  const auto w = Workload::make(131);
  const auto result = run_conversations(w.engine(Mode::exact), w.data.conversations,
                                        w.data.queries);
  CHECK(result.turns.size() == 12 * 5);
  const auto report = evaluate_run(result.run, w.data.qrels);
  CHECK(report.mean.mrr10 == doctest::Approx(1.0));
  CHECK(report.mean.ndcg10 == doctest::Approx(1.0));
  // Exhaustive work per turn.
  for (const auto& t : result.turns) CHECK(t.evals == w.data.corpus.size());
}

TEST_CASE("run_conversations: ivf with np=p equals exact") {
  const auto w = Workload::make(132);
  auto ivf_engine = w.engine(Mode::ivf);
  ivf_engine.params.np = w.ivf.p();
  const auto a = run_conversations(ivf_engine, w.data.conversations, w.data.queries);
  const auto b = run_conversations(w.engine(Mode::exact), w.data.conversations,
                                   w.data.queries);
  REQUIRE(a.run.topics.size() == b.run.topics.size());
  for (const auto& [topic, docs] : a.run.topics) {
    const auto& other = b.run.topics.at(topic);
    REQUIRE(docs.size() == other.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      CHECK(docs[i].first == other[i].first);
      CHECK(docs[i].second == other[i].second);
    }
  }
}

TEST_CASE("run_conversations: toploc telemetry carries the counter contract") {
  const auto w = Workload::make(133);
  auto engine = w.engine(Mode::toploc_ivf);
  engine.params.np = 8;
  engine.params.h = 32;
  const auto result = run_conversations(engine, w.data.conversations, w.data.queries);

  auto plain = w.engine(Mode::ivf);
  plain.params.np = 8;
  const auto base = run_conversations(plain, w.data.conversations, w.data.queries);

  std::size_t turn_in_conv = 0;
  for (std::size_t i = 0; i < result.turns.size(); ++i) {
    const auto& t = result.turns[i];
    turn_in_conv = t.topic.ends_with("_1") ? 1 : turn_in_conv + 1;
    if (turn_in_conv == 1) {
      CHECK(t.centroid_evals == w.ivf.p());  // opening scores the full set
      CHECK(t.i0 == -1);
    } else {
      CHECK(t.centroid_evals == 32);
      CHECK(t.i0 >= 0);
      // Exact h/p centroid-scoring ratio against the plain baseline.
      CHECK(double(t.centroid_evals) / double(base.turns[i].centroid_evals) ==
            doctest::Approx(32.0 / 64.0));
    }
    CHECK(!t.refreshed);
  }
  CHECK(result.refresh_count == 0);
}

TEST_CASE("run_conversations: throughput mode returns identical rankings") {
  const auto w = Workload::make(134);
  auto engine = w.engine(Mode::toploc_hnsw);
  engine.params.ef = 32;
  engine.params.up = 2.0;
  const auto seq = run_conversations(engine, w.data.conversations, w.data.queries, true, 1);
  const auto par = run_conversations(engine, w.data.conversations, w.data.queries, false, 4);
  REQUIRE(seq.run.topics.size() == par.run.topics.size());
  for (const auto& [topic, docs] : seq.run.topics) {
    const auto& other = par.run.topics.at(topic);
    REQUIRE(docs.size() == other.size());
    for (std::size_t i = 0; i < docs.size(); ++i) CHECK(docs[i].first == other[i].first);
  }
}

TEST_CASE("time_conversations: self-comparison lands near 1x") {
  const auto w = Workload::make(135);
  auto engine = w.engine(Mode::exact);
  const auto a = time_conversations(engine, w.data.conversations, w.data.queries);
  auto b = time_conversations(engine, w.data.conversations, w.data.queries);
  set_speedup(b, a.method, a.mean_ms);
  CHECK(b.speedup > 0.8);
  CHECK(b.speedup < 1.25);
  CHECK(b.speedup_vs == "exact");
  CHECK(a.total_evals == b.total_evals);  // work counters reproduce exactly
}

TEST_CASE("report json: stable keys") {
  const auto w = Workload::make(136);
  auto engine = w.engine(Mode::toploc_ivf_plus);
  engine.params.np = 8;
  engine.params.h = 32;
  engine.params.alpha = 0.1;
  const auto result = run_conversations(engine, w.data.conversations, w.data.queries);
  const auto timing = summarize_timing(result, engine.mode, 1);
  const auto j = timing_report_json(timing, result);
  for (const char* key : {"method", "mean", "per_topic", "speedup_vs"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["method"] == "toploc-ivf-plus");
  CHECK(j["per_topic"].size() == result.turns.size());

  const auto report = evaluate_run(result.run, w.data.qrels);
  const auto mj = metrics_report_json(report, "toploc-ivf-plus");
  for (const char* key : {"method", "mean", "per_topic", "speedup_vs"}) {
    CHECK(mj.contains(key));
  }
  CHECK(mj["mean"].contains("mrr@10"));
  CHECK(mj["mean"].contains("ndcg@3"));
  CHECK(mj["mean"].contains("ndcg@10"));
}

TEST_CASE("cmd_gen_synth + cmd_build + cmd_run + cmd_evaluate wire together") {
  TempDir dir("toploc_cmd_pipeline");

  GenSynthArgs gen;
  gen.spec.n = 1500;
  gen.spec.d = 12;
  gen.spec.clusters = 8;
  gen.spec.conversations = 5;
  gen.spec.turns_per_conversation = 4;
  gen.spec.seed = 21;
  gen.out_dir = dir.dir.string();
  REQUIRE(cmd_gen_synth(gen) == 0);

  BuildArgs build;
  build.kind = "ivf";
  build.vectors = dir / "corpus.tlvec";
  build.out = dir / "ivf.idx";
  build.p = 32;
  build.max_iters = 8;
  REQUIRE(cmd_build(build) == 0);

  RunArgs run;
  run.mode = "toploc-ivf-plus";
  run.vectors = dir / "corpus.tlvec";
  run.queries = dir / "queries.tlvec";
  run.conversations = dir / "conversations.tsv";
  run.index = dir / "ivf.idx";
  run.run_out = dir / "run.txt";
  run.report_out = dir / "report.json";
  run.np = 4;
  run.h = 16;
  run.alpha = 0.1;
  REQUIRE(cmd_run(run) == 0);

  std::ifstream rf(dir / "report.json");
  const auto report = nlohmann::json::parse(rf);
  CHECK(report["config"]["mode"] == "toploc-ivf-plus");
  CHECK(report["config"]["alpha"] == 0.1);
  CHECK(report.contains("refresh_count"));

  EvaluateArgs ev;
  ev.run = dir / "run.txt";
  ev.qrels = dir / "qrels.txt";
  CHECK(cmd_evaluate(ev) == 0);
}

TEST_CASE("cmd_run: usage errors before any work") {
  RunArgs run;
  run.mode = "toploc-ivf";
  run.vectors = "/nonexistent.tlvec";
  run.queries = "/nonexistent.tlvec";
  run.conversations = "/nonexistent.tsv";
  run.index = "/nonexistent.idx";
  run.run_out = "/tmp/toploc_never_run.txt";
  run.report_out = "/tmp/toploc_never_report.json";
  // --np/--h missing: rejected before touching the (nonexistent) files.
  CHECK(cmd_run(run) != 0);
  CHECK(!fs::exists("/tmp/toploc_never_run.txt"));

  run.mode = "no-such-mode";
  CHECK(cmd_run(run) != 0);
}

TEST_CASE("cmd_build: failure leaves no partial file") {
  TempDir dir("toploc_cmd_buildfail");
  const auto store = oracle::random_store(50, 4, 137);
  write_vectors(store, dir / "v.tlvec");

  BuildArgs build;
  build.kind = "ivf";
  build.vectors = dir / "v.tlvec";
  build.out = dir / "out.idx";
  build.p = 51;  // > n
  CHECK(cmd_build(build) != 0);
  CHECK(!fs::exists(dir / "out.idx"));
}

TEST_CASE("cmd_gen_synth: repeated seed gives byte-identical outputs") {
  TempDir a("toploc_gen_a"), b("toploc_gen_b");
  GenSynthArgs gen;
  gen.spec.n = 400;
  gen.spec.d = 8;
  gen.spec.clusters = 4;
  gen.spec.conversations = 3;
  gen.spec.turns_per_conversation = 3;
  gen.spec.seed = 5;
  gen.out_dir = a.dir.string();
  REQUIRE(cmd_gen_synth(gen) == 0);
  gen.out_dir = b.dir.string();
  REQUIRE(cmd_gen_synth(gen) == 0);
  for (const char* f : {"corpus.tlvec", "queries.tlvec", "conversations.tsv", "qrels.txt"}) {
    std::ifstream fa(a / f, std::ios::binary), fb(b / f, std::ios::binary);
    const std::string ca((std::istreambuf_iterator<char>(fa)), {});
    const std::string cb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(ca == cb);
  }
}

TEST_CASE("cmd_sweep: np ladder is clipped and quality is monotone") {
  TempDir dir("toploc_cmd_sweep");
  GenSynthArgs gen;
  gen.spec.n = 1500;
  gen.spec.d = 12;
  gen.spec.clusters = 8;
  gen.spec.conversations = 5;
  gen.spec.turns_per_conversation = 4;
  gen.spec.seed = 23;
  gen.out_dir = dir.dir.string();
  REQUIRE(cmd_gen_synth(gen) == 0);

  BuildArgs build;
  build.kind = "ivf";
  build.vectors = dir / "corpus.tlvec";
  build.out = dir / "ivf.idx";
  build.p = 16;
  build.max_iters = 8;
  REQUIRE(cmd_build(build) == 0);

  SweepArgs sweep;
  sweep.base.mode = "ivf";
  sweep.base.vectors = dir / "corpus.tlvec";
  sweep.base.queries = dir / "queries.tlvec";
  sweep.base.conversations = dir / "conversations.tsv";
  sweep.base.index = dir / "ivf.idx";
  sweep.base.np = 1;
  sweep.qrels = dir / "qrels.txt";
  sweep.param = "np";
  sweep.values = {1, 2, 4, 8, 16, 32, 64};  // 32 and 64 exceed p=16
  sweep.out_csv = dir / "sweep.csv";
  REQUIRE(cmd_sweep(sweep) == 0);

  std::ifstream csv(dir / "sweep.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "np,mean_time_ms,similarity_evals,mrr10,ndcg3,ndcg10");
  std::vector<double> ndcg10;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const auto last_comma = line.rfind(',');
    ndcg10.push_back(std::stod(line.substr(last_comma + 1)));
  }
  CHECK(rows == 5);  // clipped at p
  for (std::size_t i = 1; i < ndcg10.size(); ++i) {
    CHECK(ndcg10[i] >= ndcg10[i - 1] - 0.01);
  }
  CHECK(ndcg10.back() == doctest::Approx(1.0));  // np = p is exhaustive

  SUBCASE("unsorted or empty values are usage errors") {
    sweep.values = {4, 2};
    CHECK(cmd_sweep(sweep) != 0);
    sweep.values = {};
    CHECK(cmd_sweep(sweep) != 0);
  }
}
