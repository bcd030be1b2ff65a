#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "toploc/hnsw.hpp"
#include "toploc/io.hpp"
#include "toploc/ivf.hpp"
#include "toploc/metrics.hpp"

namespace toploc {

enum class Mode { exact, ivf, toploc_ivf, toploc_ivf_plus, hnsw, toploc_hnsw };

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

struct EngineParams {
  std::size_t k = 10;
  std::size_t np = 16;
  std::size_t h = 512;
  double alpha = 0.0;
  std::size_t ef = 128;
  double up = 2.0;
};

// Borrowed views of loaded state; whichever index the mode needs must be set.
struct Engine {
  Mode mode = Mode::exact;
  const VectorStore* store = nullptr;
  const IvfIndex* ivf = nullptr;
  const HnswGraph* hnsw = nullptr;
  EngineParams params;
};

struct TurnTelemetry {
  std::string topic;
  double time_us = 0.0;
  std::uint64_t evals = 0;
  std::uint64_t centroid_evals = 0;
  long long i0 = -1;
  bool refreshed = false;
};

struct HarnessResult {
  RankedRun run;
  std::vector<TurnTelemetry> turns;
  std::size_t refresh_count = 0;
};

// Executes every conversation's turns in order through the configured mode.
// Turn order within a conversation is sequential; with single_thread=false
// whole conversations run concurrently in batches. Only the search call is
// timed. Throws when a turn's embedding row is missing from `queries`.
HarnessResult run_conversations(const Engine& engine,
                                std::span<const Conversation> conversations,
                                const VectorStore& queries, bool single_thread = true,
                                std::size_t batch_size = 1);

struct TimingReport {
  std::string method;
  std::vector<double> per_turn_us;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  std::uint64_t total_evals = 0;
  double mean_evals_per_turn = 0.0;
  double mean_centroid_evals_per_turn = 0.0;
  std::size_t turn_count = 0;
  std::size_t batch_size = 1;
  std::string speedup_vs;  // baseline method name; empty when unset
  double speedup = 0.0;
};

TimingReport summarize_timing(const HarnessResult& result, Mode mode, std::size_t batch_size);

// Runs the workload and summarizes; single-threaded when reproducible latency
// is requested.
TimingReport time_conversations(const Engine& engine,
                                std::span<const Conversation> conversations,
                                const VectorStore& queries, bool single_thread = true,
                                std::size_t batch_size = 1);

// baseline mean time / this mean time.
void set_speedup(TimingReport& report, const std::string& baseline_method,
                 double baseline_mean_ms);

// Stable-keyed JSON documents (method, mean, per_topic, speedup_vs always
// present).
nlohmann::json timing_report_json(const TimingReport& report, const HarnessResult& result);
nlohmann::json metrics_report_json(const MetricsReport& report, const std::string& method);

}  // namespace toploc
