#include "toploc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "toploc/session.hpp"

namespace toploc {

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::exact: return "exact";
    case Mode::ivf: return "ivf";
    case Mode::toploc_ivf: return "toploc-ivf";
    case Mode::toploc_ivf_plus: return "toploc-ivf-plus";
    case Mode::hnsw: return "hnsw";
    case Mode::toploc_hnsw: return "toploc-hnsw";
  }
  throw std::logic_error("mode_name: unknown mode");
}

Mode parse_mode(const std::string& name) {
  if (name == "exact") return Mode::exact;
  if (name == "ivf") return Mode::ivf;
  if (name == "toploc-ivf") return Mode::toploc_ivf;
  if (name == "toploc-ivf-plus") return Mode::toploc_ivf_plus;
  if (name == "hnsw") return Mode::hnsw;
  if (name == "toploc-hnsw") return Mode::toploc_hnsw;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (expected exact|ivf|toploc-ivf|toploc-ivf-plus|hnsw|toploc-hnsw)");
}

namespace {

void check_engine(const Engine& e) {
  if (e.store == nullptr) throw std::invalid_argument("engine: document store not loaded");
  switch (e.mode) {
    case Mode::exact:
      break;
    case Mode::ivf:
    case Mode::toploc_ivf:
    case Mode::toploc_ivf_plus:
      if (e.ivf == nullptr) throw std::invalid_argument("engine: IVF index not loaded");
      break;
    case Mode::hnsw:
    case Mode::toploc_hnsw:
      if (e.hnsw == nullptr) throw std::invalid_argument("engine: HNSW graph not loaded");
      break;
  }
}

struct ConversationOutput {
  std::vector<std::pair<std::string, std::vector<ScoredHit>>> per_turn_hits;
  std::vector<TurnTelemetry> turns;
  std::size_t refresh_count = 0;
};

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

ConversationOutput run_one(const Engine& e, const Conversation& conv,
                           const VectorStore& queries) {
  ConversationOutput out;
  const EngineParams& prm = e.params;

  std::optional<IvfSession> ivf_session;
  std::optional<HnswSession> hnsw_session;

  for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
    const auto& turn = conv.turns[ti];
    if (turn.query_row >= queries.size()) {
      throw std::runtime_error("conversation '" + conv.id + "' turn '" + turn.id +
                               "': missing query embedding row");
    }
    const auto q = queries.row(turn.query_row);

    TurnTelemetry tel;
    tel.topic = Conversation::topic_of(conv.id, turn.id);
    std::vector<ScoredHit> hits;

    const auto t0 = Clock::now();
    switch (e.mode) {
      case Mode::exact: {
        WorkCounter wc;
        hits = top_k(q, *e.store, prm.k, wc);
        tel.evals = wc.similarity_evaluations;
        break;
      }
      case Mode::ivf: {
        WorkCounter wc;
        hits = search_ivf(*e.ivf, q, prm.k, prm.np, wc);
        tel.evals = wc.similarity_evaluations;
        tel.centroid_evals = e.ivf->p();
        break;
      }
      case Mode::toploc_ivf:
      case Mode::toploc_ivf_plus: {
        const double alpha = e.mode == Mode::toploc_ivf_plus ? prm.alpha : 0.0;
        TurnResult r;
        if (!ivf_session) {
          auto [opening, session] = open_ivf_session(*e.ivf, q, prm.h, prm.np, prm.k, alpha);
          ivf_session = std::move(session);
          r = std::move(opening);
        } else {
          r = search_ivf_session(*ivf_session, *e.ivf, q, prm.k);
        }
        hits = std::move(r.hits);
        tel.evals = r.work;
        tel.centroid_evals = r.centroid_work;
        tel.i0 = r.i0;
        tel.refreshed = r.refreshed;
        break;
      }
      case Mode::hnsw: {
        WorkCounter wc;
        hits = search_hnsw(*e.hnsw, q, prm.k, prm.ef, wc);
        tel.evals = wc.similarity_evaluations;
        break;
      }
      case Mode::toploc_hnsw: {
        TurnResult r;
        if (!hnsw_session) {
          auto [opening, session] = open_hnsw_session(*e.hnsw, q, prm.ef, prm.up, prm.k);
          hnsw_session = session;
          r = std::move(opening);
        } else {
          r = search_hnsw_session(*hnsw_session, *e.hnsw, q, prm.ef, prm.k);
        }
        hits = std::move(r.hits);
        tel.evals = r.work;
        break;
      }
    }
    tel.time_us = elapsed_us(t0, Clock::now());

    if (tel.refreshed) ++out.refresh_count;
    out.turns.push_back(std::move(tel));
    out.per_turn_hits.emplace_back(Conversation::topic_of(conv.id, turn.id), std::move(hits));
  }
  return out;
}

}  // namespace

HarnessResult run_conversations(const Engine& engine,
                                std::span<const Conversation> conversations,
                                const VectorStore& queries, bool single_thread,
                                std::size_t batch_size) {
  check_engine(engine);
  if (batch_size == 0) throw std::invalid_argument("run_conversations: batch size must be >= 1");
  if (queries.dim() != engine.store->dim()) {
    throw std::invalid_argument("run_conversations: query dimensionality (" +
                                std::to_string(queries.dim()) + ") does not match store (" +
                                std::to_string(engine.store->dim()) + ")");
  }

  std::vector<ConversationOutput> outputs(conversations.size());
  if (single_thread) {
    for (std::size_t i = 0; i < conversations.size(); ++i) {
      outputs[i] = run_one(engine, conversations[i], queries);
    }
  } else {
    // Whole conversations run concurrently; turn order inside each stays
    // sequential. Results are merged in conversation order.
    for (std::size_t base = 0; base < conversations.size(); base += batch_size) {
      const std::size_t end = std::min(base + batch_size, conversations.size());
      std::vector<std::future<ConversationOutput>> futs;
      futs.reserve(end - base);
      for (std::size_t i = base; i < end; ++i) {
        futs.push_back(std::async(std::launch::async, [&, i] {
          return run_one(engine, conversations[i], queries);
        }));
      }
      for (std::size_t i = base; i < end; ++i) outputs[i] = futs[i - base].get();
    }
  }

  HarnessResult result;
  for (auto& out : outputs) {
    result.refresh_count += out.refresh_count;
    for (auto& [topic, hits] : out.per_turn_hits) {
      auto& docs = result.run.topics[topic];
      docs.reserve(hits.size());
      for (const auto& h : hits) {
        docs.emplace_back(engine.store->id_of(h.id), h.score);
      }
    }
    for (auto& t : out.turns) result.turns.push_back(std::move(t));
  }
  return result;
}

TimingReport summarize_timing(const HarnessResult& result, Mode mode, std::size_t batch_size) {
  TimingReport report;
  report.method = mode_name(mode);
  report.batch_size = batch_size;
  report.turn_count = result.turns.size();
  report.per_turn_us.reserve(result.turns.size());
  double total_us = 0.0;
  std::uint64_t total_evals = 0;
  std::uint64_t total_centroid = 0;
  for (const auto& t : result.turns) {
    report.per_turn_us.push_back(t.time_us);
    total_us += t.time_us;
    total_evals += t.evals;
    total_centroid += t.centroid_evals;
  }
  report.total_evals = total_evals;
  if (!result.turns.empty()) {
    const auto n = static_cast<double>(result.turns.size());
    report.mean_ms = total_us / n / 1000.0;
    report.mean_evals_per_turn = static_cast<double>(total_evals) / n;
    report.mean_centroid_evals_per_turn = static_cast<double>(total_centroid) / n;
    auto sorted = report.per_turn_us;
    std::sort(sorted.begin(), sorted.end());
    report.median_ms = sorted[sorted.size() / 2] / 1000.0;
  }
  return report;
}

TimingReport time_conversations(const Engine& engine,
                                std::span<const Conversation> conversations,
                                const VectorStore& queries, bool single_thread,
                                std::size_t batch_size) {
  const HarnessResult result =
      run_conversations(engine, conversations, queries, single_thread, batch_size);
  return summarize_timing(result, engine.mode, batch_size);
}

void set_speedup(TimingReport& report, const std::string& baseline_method,
                 double baseline_mean_ms) {
  if (baseline_mean_ms <= 0.0 || report.mean_ms <= 0.0) {
    throw std::invalid_argument("set_speedup: mean times must be positive");
  }
  report.speedup_vs = baseline_method;
  report.speedup = baseline_mean_ms / report.mean_ms;
}

nlohmann::json timing_report_json(const TimingReport& report, const HarnessResult& result) {
  nlohmann::json per_topic = nlohmann::json::object();
  for (const auto& t : result.turns) {
    nlohmann::json entry{{"time_us", t.time_us},
                         {"evals", t.evals},
                         {"centroid_evals", t.centroid_evals},
                         {"refreshed", t.refreshed}};
    entry["i0"] = t.i0;
    per_topic[t.topic] = std::move(entry);
  }
  nlohmann::json j{
      {"method", report.method},
      {"mean",
       {{"time_ms", report.mean_ms},
        {"median_time_ms", report.median_ms},
        {"evals_per_turn", report.mean_evals_per_turn},
        {"centroid_evals_per_turn", report.mean_centroid_evals_per_turn}}},
      {"per_topic", std::move(per_topic)},
      {"total_evals", report.total_evals},
      {"turn_count", report.turn_count},
      {"batch_size", report.batch_size},
      {"refresh_count", result.refresh_count},
  };
  if (report.speedup_vs.empty()) {
    j["speedup_vs"] = nullptr;
  } else {
    j["speedup_vs"] = {{"method", report.speedup_vs}, {"speedup", report.speedup}};
  }
  return j;
}

nlohmann::json metrics_report_json(const MetricsReport& report, const std::string& method) {
  nlohmann::json per_topic = nlohmann::json::object();
  for (const auto& [topic, tm] : report.per_topic) {
    per_topic[topic] = {{"mrr@10", tm.mrr10}, {"ndcg@3", tm.ndcg3}, {"ndcg@10", tm.ndcg10}};
  }
  nlohmann::json j{
      {"method", method},
      {"mean",
       {{"mrr@10", report.mean.mrr10},
        {"ndcg@3", report.mean.ndcg3},
        {"ndcg@10", report.mean.ndcg10}}},
      {"per_topic", std::move(per_topic)},
      {"topic_count", report.topic_count},
      {"speedup_vs", nullptr},
  };
  if (!report.missing_topics.empty()) j["missing_topics"] = report.missing_topics;
  return j;
}

}  // namespace toploc
