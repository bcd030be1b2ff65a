#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace toploc {

// Graded relevance judgments: topic -> document -> grade (>= 0).
struct Qrels {
  std::map<std::string, std::unordered_map<std::string, int>> topics;

  bool topic_has_positive(const std::string& topic) const {
    auto it = topics.find(topic);
    if (it == topics.end()) return false;
    for (const auto& [doc, grade] : it->second) {
      if (grade > 0) return true;
    }
    return false;
  }
};

// Per-topic ranking, descending score. No duplicate document per topic.
struct RankedRun {
  std::map<std::string, std::vector<std::pair<std::string, float>>> topics;
};

enum class GainFunction { linear, exponential };

// 1/rank of the first document with grade >= 1 within the cutoff, else 0.
double mrr_at(const std::vector<std::string>& ranked_docs,
              const std::unordered_map<std::string, int>& qrels_topic, std::size_t cutoff);

// DCG@cutoff / IDCG@cutoff with discount 1/log2(rank+1). Linear gain uses the
// grade itself; exponential uses 2^grade - 1. Zero when no positive grade.
double ndcg_at(const std::vector<std::string>& ranked_docs,
               const std::unordered_map<std::string, int>& qrels_topic, std::size_t cutoff,
               GainFunction gain = GainFunction::linear);

struct TopicMetrics {
  double mrr10 = 0.0;
  double ndcg3 = 0.0;
  double ndcg10 = 0.0;
};

struct MetricsReport {
  std::map<std::string, TopicMetrics> per_topic;
  TopicMetrics mean;
  std::size_t topic_count = 0;
  std::vector<std::string> missing_topics;  // judged topics absent from the run
};

// Evaluates every qrels topic that has at least one positive grade. Topics
// missing from the run score zero and are listed in missing_topics. Throws
// std::invalid_argument when the run shares no topic with the qrels.
MetricsReport evaluate_run(const RankedRun& run, const Qrels& qrels,
                           GainFunction gain = GainFunction::linear);

}  // namespace toploc
