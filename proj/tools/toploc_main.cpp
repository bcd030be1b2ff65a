#include <CLI11.hpp>

#include "toploc/commands.hpp"

using namespace toploc;

int main(int argc, char** argv) {
  CLI::App app{"toploc: IVF/HNSW vector search with conversational session caching"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from a config file (flags override it)");
  // Subcommands drop the -h short flag; it would collide with --h below.
  app.option_defaults()->always_capture_default();

  const auto sub = [&app](const char* name, const char* desc) {
    auto* cmd = app.add_subcommand(name, desc);
    cmd->set_help_flag("--help", "Print help");
    return cmd;
  };

  // build
  BuildArgs build;
  auto* cmd_b = sub("build", "Build and persist an index");
  cmd_b->add_option("--kind", build.kind, "Index kind: ivf | hnsw")->required();
  cmd_b->add_option("--vectors", build.vectors, "Document vector file")->required();
  cmd_b->add_option("--out", build.out, "Output index path")->required();
  cmd_b->add_flag("--normalize", build.normalize, "L2-normalize vectors before indexing");
  cmd_b->add_option("--p", build.p, "IVF partition count");
  cmd_b->add_option("--max-iters", build.max_iters, "IVF k-means iteration cap");
  cmd_b->add_option("--M", build.M, "HNSW connections per node per layer");
  cmd_b->add_option("--ef-construction", build.ef_construction, "HNSW build candidate capacity");
  cmd_b->add_option("--seed", build.seed, "Random seed");

  // run
  RunArgs run;
  auto* cmd_r = sub("run", "Run conversations and write a run file + report");
  cmd_r->add_option("--mode", run.mode,
                    "exact | ivf | toploc-ivf | toploc-ivf-plus | hnsw | toploc-hnsw")
      ->required();
  cmd_r->add_option("--vectors", run.vectors, "Document vector file")->required();
  cmd_r->add_option("--queries", run.queries, "Query vector file")->required();
  cmd_r->add_option("--conversations", run.conversations, "Conversation TSV")->required();
  cmd_r->add_option("--index", run.index, "Index file (required except for exact)");
  cmd_r->add_option("--run-out", run.run_out, "Output TREC run path")->required();
  cmd_r->add_option("--report-out", run.report_out, "Output JSON report path")->required();
  cmd_r->add_option("--tag", run.tag, "Run tag");
  cmd_r->add_option("--baseline-report", run.baseline_report,
                    "Prior report JSON; adds a speedup ratio against it");
  cmd_r->add_flag("--normalize", run.normalize, "L2-normalize document vectors after loading");
  cmd_r->add_option("--k", run.k, "Results per turn");
  cmd_r->add_option("--np", run.np, "IVF probe count");
  cmd_r->add_option("--h", run.h, "Cached centroid count");
  cmd_r->add_option("--alpha", run.alpha, "Refresh threshold fraction of np");
  cmd_r->add_option("--ef", run.ef, "HNSW candidate capacity");
  cmd_r->add_option("--up", run.up, "Opening-turn ef upscaling factor");
  bool throughput = false;
  cmd_r->add_flag("--throughput", throughput,
                  "Run conversations concurrently (default: single-threaded)");
  cmd_r->add_option("--batch-size", run.batch_size, "Conversations per batch");

  // sweep
  SweepArgs sweep;
  auto* cmd_s = sub("sweep", "Sweep one parameter and write a CSV trade-off table");
  cmd_s->add_option("--mode", sweep.base.mode, "Search mode")->required();
  cmd_s->add_option("--vectors", sweep.base.vectors, "Document vector file")->required();
  cmd_s->add_option("--queries", sweep.base.queries, "Query vector file")->required();
  cmd_s->add_option("--conversations", sweep.base.conversations, "Conversation TSV")->required();
  cmd_s->add_option("--index", sweep.base.index, "Index file");
  cmd_s->add_option("--qrels", sweep.qrels, "Qrels file")->required();
  cmd_s->add_option("--param", sweep.param, "np | h | alpha | ef | up | k")->required();
  cmd_s->add_option("--values", sweep.values, "Ascending parameter values")
      ->required()
      ->delimiter(',');
  cmd_s->add_option("--out", sweep.out_csv, "Output CSV path")->required();
  cmd_s->add_flag("--normalize", sweep.base.normalize, "L2-normalize document vectors");
  cmd_s->add_option("--k", sweep.base.k, "Results per turn");
  cmd_s->add_option("--np", sweep.base.np, "IVF probe count");
  cmd_s->add_option("--h", sweep.base.h, "Cached centroid count");
  cmd_s->add_option("--alpha", sweep.base.alpha, "Refresh threshold fraction");
  cmd_s->add_option("--ef", sweep.base.ef, "HNSW candidate capacity");
  cmd_s->add_option("--up", sweep.base.up, "Opening-turn upscaling factor");

  // evaluate
  EvaluateArgs evaluate;
  auto* cmd_e = sub("evaluate", "Score a run against qrels");
  cmd_e->add_option("--run", evaluate.run, "TREC run file")->required();
  cmd_e->add_option("--qrels", evaluate.qrels, "Qrels file")->required();
  cmd_e->add_flag("--exponential-gain", evaluate.exponential_gain,
                  "Use 2^grade - 1 gains instead of linear");

  // gen-synth
  GenSynthArgs gen;
  auto* cmd_g = sub("gen-synth", "Generate a clustered synthetic workload");
  cmd_g->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  cmd_g->add_option("--n", gen.spec.n, "Corpus size");
  cmd_g->add_option("--d", gen.spec.d, "Dimensionality");
  cmd_g->add_option("--clusters", gen.spec.clusters, "Cluster count");
  cmd_g->add_option("--sigma", gen.spec.sigma, "Within-cluster standard deviation");
  cmd_g->add_option("--conversations", gen.spec.conversations, "Conversation count");
  cmd_g->add_option("--turns", gen.spec.turns_per_conversation, "Turns per conversation");
  cmd_g->add_option("--drift", gen.spec.drift, "Per-turn query displacement fraction");
  cmd_g->add_option("--shift-at", gen.spec.shift_at,
                    "1-based turn number that jumps to another cluster (-1 disables)");
  cmd_g->add_option("--seed", gen.spec.seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  if (cmd_b->parsed()) return cmd_build(build);
  if (cmd_r->parsed()) {
    run.single_thread = !throughput;
    return cmd_run(run);
  }
  if (cmd_s->parsed()) return cmd_sweep(sweep);
  if (cmd_e->parsed()) return cmd_evaluate(evaluate);
  if (cmd_g->parsed()) return cmd_gen_synth(gen);
  return 1;
}
