#include "toploc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace toploc {

namespace {

double gain_of(int grade, GainFunction gain) {
  if (gain == GainFunction::linear) return static_cast<double>(grade);
  return std::pow(2.0, static_cast<double>(grade)) - 1.0;
}

}  // namespace

double mrr_at(const std::vector<std::string>& ranked_docs,
              const std::unordered_map<std::string, int>& qrels_topic, std::size_t cutoff) {
  if (cutoff == 0) throw std::invalid_argument("mrr_at: cutoff must be >= 1");
  const std::size_t limit = std::min(cutoff, ranked_docs.size());
  for (std::size_t r = 0; r < limit; ++r) {
    auto it = qrels_topic.find(ranked_docs[r]);
    if (it != qrels_topic.end() && it->second >= 1) {
      return 1.0 / static_cast<double>(r + 1);
    }
  }
  return 0.0;
}

double ndcg_at(const std::vector<std::string>& ranked_docs,
               const std::unordered_map<std::string, int>& qrels_topic, std::size_t cutoff,
               GainFunction gain) {
  if (cutoff == 0) throw std::invalid_argument("ndcg_at: cutoff must be >= 1");

  std::vector<int> grades;
  grades.reserve(qrels_topic.size());
  for (const auto& [doc, grade] : qrels_topic) {
    if (grade > 0) grades.push_back(grade);
  }
  if (grades.empty()) return 0.0;
  std::sort(grades.begin(), grades.end(), std::greater<>());

  double idcg = 0.0;
  const std::size_t ideal_limit = std::min(cutoff, grades.size());
  for (std::size_t r = 0; r < ideal_limit; ++r) {
    idcg += gain_of(grades[r], gain) / std::log2(static_cast<double>(r + 2));
  }

  double dcg = 0.0;
  const std::size_t limit = std::min(cutoff, ranked_docs.size());
  for (std::size_t r = 0; r < limit; ++r) {
    auto it = qrels_topic.find(ranked_docs[r]);
    if (it != qrels_topic.end() && it->second > 0) {
      dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(r + 2));
    }
  }
  return dcg / idcg;
}

MetricsReport evaluate_run(const RankedRun& run, const Qrels& qrels, GainFunction gain) {
  bool any_shared = false;
  for (const auto& [topic, docs] : run.topics) {
    if (qrels.topics.count(topic)) {
      any_shared = true;
      break;
    }
  }
  if (!any_shared) {
    throw std::invalid_argument("evaluate_run: run and qrels share no topic");
  }

  MetricsReport report;
  double sum_mrr = 0.0, sum_n3 = 0.0, sum_n10 = 0.0;
  for (const auto& [topic, judged] : qrels.topics) {
    if (!qrels.topic_has_positive(topic)) continue;
    TopicMetrics tm;
    auto it = run.topics.find(topic);
    if (it == run.topics.end()) {
      report.missing_topics.push_back(topic);
    } else {
      std::vector<std::string> docs;
      docs.reserve(it->second.size());
      for (const auto& [doc, score] : it->second) docs.push_back(doc);
      tm.mrr10 = mrr_at(docs, judged, 10);
      tm.ndcg3 = ndcg_at(docs, judged, 3, gain);
      tm.ndcg10 = ndcg_at(docs, judged, 10, gain);
    }
    report.per_topic.emplace(topic, tm);
    sum_mrr += tm.mrr10;
    sum_n3 += tm.ndcg3;
    sum_n10 += tm.ndcg10;
  }
  report.topic_count = report.per_topic.size();
  if (report.topic_count > 0) {
    const auto n = static_cast<double>(report.topic_count);
    report.mean = {sum_mrr / n, sum_n3 / n, sum_n10 / n};
  }
  return report;
}

}  // namespace toploc
