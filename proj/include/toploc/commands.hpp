#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toploc/harness.hpp"
#include "toploc/io.hpp"

namespace toploc {

// Subcommand implementations behind the CLI front end. Each returns a process
// exit status, prints human-readable diagnostics to stderr, and removes any
// partially written output on failure.

struct BuildArgs {
  std::string kind;  // "ivf" or "hnsw"
  std::string vectors;
  std::string out;
  bool normalize = false;
  std::size_t p = 4096;
  std::size_t max_iters = 25;
  std::size_t M = 16;
  std::size_t ef_construction = 200;
  std::uint64_t seed = 42;
};
int cmd_build(const BuildArgs& args);

struct RunArgs {
  std::string mode;
  std::string vectors;
  std::string queries;
  std::string conversations;
  std::string index;
  std::string run_out;
  std::string report_out;
  std::string tag = "toploc";
  std::string baseline_report;  // optional prior report JSON for speedup
  bool normalize = false;
  bool single_thread = true;
  std::size_t batch_size = 1;
  std::size_t k = 10;
  std::optional<std::size_t> np;
  std::optional<std::size_t> h;
  std::optional<double> alpha;
  std::optional<std::size_t> ef;
  std::optional<double> up;
};
int cmd_run(const RunArgs& args);

struct SweepArgs {
  RunArgs base;
  std::string param;  // np | h | alpha | ef | up
  std::vector<double> values;
  std::string qrels;
  std::string out_csv;
};
int cmd_sweep(const SweepArgs& args);

struct EvaluateArgs {
  std::string run;
  std::string qrels;
  bool exponential_gain = false;
};
int cmd_evaluate(const EvaluateArgs& args);

struct GenSynthArgs {
  SyntheticSpec spec;
  std::string out_dir;
};
int cmd_gen_synth(const GenSynthArgs& args);

}  // namespace toploc
