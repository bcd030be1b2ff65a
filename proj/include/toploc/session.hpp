#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "toploc/core.hpp"
#include "toploc/hnsw.hpp"
#include "toploc/ivf.hpp"

namespace toploc {

// Per-turn outcome and telemetry. i0 is -1 on opening turns and for graph
// sessions, where the intersection proxy does not apply.
struct TurnResult {
  std::vector<ScoredHit> hits;
  bool refreshed = false;
  long long i0 = -1;
  std::uint64_t work = 0;           // total similarity evaluations this turn
  std::uint64_t centroid_work = 0;  // evaluations spent scoring centroids
};

// Conversation state for an inverted-file index: the hot-centroid cache built
// from the first utterance, plus the anchor's top-np reference set used by
// the intersection proxy. Owned by one conversation; single-writer.
struct IvfSession {
  std::vector<std::uint32_t> cached_index;  // original centroid index per slot
  std::vector<float> cached_data;           // |cached| x dim centroid copies
  std::vector<std::uint32_t> anchor_top;    // sorted original indices, |anchor_top| = np
  std::size_t h = 0;
  std::size_t np = 0;
  double alpha = 0.0;
  std::size_t refresh_count = 0;
  std::size_t dim = 0;

  std::span<const float> cached_row(std::size_t slot) const {
    return {cached_data.data() + slot * dim, dim};
  }
};

// Answers q0 by scoring the full centroid set once (cost p), caches its
// top-h centroids, and records the anchor's top-np among them. Requires
// np <= h <= p. alpha is the refresh threshold fraction; 0 disables refresh.
std::pair<TurnResult, IvfSession> open_ivf_session(const IvfIndex& index,
                                                   std::span<const float> q0, std::size_t h,
                                                   std::size_t np, std::size_t k,
                                                   double alpha = 0.0);

// |top_np(q, cache) ∩ anchor_top|. Costs exactly h similarity evaluations.
int i0_size(const IvfSession& session, std::span<const float> q, WorkCounter& wc);

// Scores the cache (h evaluations), derives i0, refreshes when i0 < alpha*np
// (adding p evaluations), then scans the selected top-np lists. Centroid
// work is h without refresh, h + p with.
TurnResult search_ivf_session(IvfSession& session, const IvfIndex& index,
                              std::span<const float> q, std::size_t k);

// Rebuilds the cache as top-h of the full centroid set for q; q becomes the
// new anchor. Costs p evaluations on wc.
void refresh_ivf_cache(IvfSession& session, const IvfIndex& index,
                       std::span<const float> q, WorkCounter& wc);

// Conversation state for a graph index: the privileged entry point found by
// the first utterance.
struct HnswSession {
  DocId entry = 0;
  double up = 1.0;
  bool first_done = false;
};

// Answers q0 with candidate capacity ceil(up * ef) and pins the top-1 hit as
// the session entry point. Requires up >= 1 and ceil(up * ef) >= k.
std::pair<TurnResult, HnswSession> open_hnsw_session(const HnswGraph& graph,
                                                     std::span<const float> q0,
                                                     std::size_t ef, double up,
                                                     std::size_t k);

// Follow-up turns: layer-0 expansion seeded at the session entry, no descent.
TurnResult search_hnsw_session(const HnswSession& session, const HnswGraph& graph,
                               std::span<const float> q, std::size_t ef, std::size_t k);

}  // namespace toploc
