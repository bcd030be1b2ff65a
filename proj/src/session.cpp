#include "toploc/session.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace toploc {

namespace {

// Scores q against every cached centroid, in slot order. Exactly |cache|
// evaluations.
std::vector<float> score_cache(const IvfSession& s, std::span<const float> q,
                               WorkCounter& wc) {
  std::vector<float> scores(s.cached_index.size());
  for (std::size_t slot = 0; slot < scores.size(); ++slot) {
    scores[slot] = similarity(q, s.cached_row(slot), wc);
  }
  return scores;
}

// Slots of the np best cache entries. Ties break on the original centroid
// index so that an h = p cache ranks exactly like the full centroid set.
std::vector<std::uint32_t> top_cache_slots(const IvfSession& s,
                                           std::span<const float> scores, std::size_t np) {
  std::vector<std::uint32_t> slots(scores.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<std::uint32_t>(i);
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return s.cached_index[a] < s.cached_index[b];
  };
  np = std::min(np, slots.size());
  std::partial_sort(slots.begin(), slots.begin() + np, slots.end(), better);
  slots.resize(np);
  return slots;
}

std::vector<std::uint32_t> slots_to_sorted_indices(const IvfSession& s,
                                                   std::span<const std::uint32_t> slots) {
  std::vector<std::uint32_t> idx(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) idx[i] = s.cached_index[slots[i]];
  std::sort(idx.begin(), idx.end());
  return idx;
}

int intersect_count(std::span<const std::uint32_t> sorted_a,
                    std::span<const std::uint32_t> sorted_b) {
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < sorted_a.size() && j < sorted_b.size()) {
    if (sorted_a[i] < sorted_b[j]) {
      ++i;
    } else if (sorted_b[j] < sorted_a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

// Rebuilds cache content from a full centroid scoring pass for anchor q.
void adopt_cache(IvfSession& s, const IvfIndex& index, std::span<const float> full_scores) {
  const std::vector<std::uint32_t> order = top_indices(full_scores, s.h);
  s.cached_index = order;
  s.cached_data.resize(order.size() * s.dim);
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const auto row = index.centroids.row(order[slot]);
    std::copy(row.begin(), row.end(), s.cached_data.begin() + slot * s.dim);
  }
  s.anchor_top.assign(order.begin(), order.begin() + std::min(s.np, order.size()));
  std::sort(s.anchor_top.begin(), s.anchor_top.end());
}

}  // namespace

std::pair<TurnResult, IvfSession> open_ivf_session(const IvfIndex& index,
                                                   std::span<const float> q0, std::size_t h,
                                                   std::size_t np, std::size_t k,
                                                   double alpha) {
  const std::size_t p = index.p();
  if (np == 0 || np > h || h > p) {
    throw std::invalid_argument("open_ivf_session: need 1 <= np <= h <= p, got np=" +
                                std::to_string(np) + " h=" + std::to_string(h) +
                                " p=" + std::to_string(p));
  }
  if (k == 0) throw std::invalid_argument("open_ivf_session: k must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("open_ivf_session: alpha must be in [0, 1]");
  }

  IvfSession s;
  s.h = h;
  s.np = np;
  s.alpha = alpha;
  s.dim = index.centroids.dim;

  WorkCounter wc;
  const std::vector<float> full = score_centroids(q0, index.centroids, wc);
  const std::uint64_t centroid_work = wc.similarity_evaluations;
  adopt_cache(s, index, full);

  // The opening answer probes the same top-np the anchor set records; the
  // single scoring pass above serves both.
  const std::vector<std::uint32_t> probe(s.cached_index.begin(), s.cached_index.begin() + np);
  TurnResult turn;
  turn.hits = scan_lists(index, q0, probe, k, wc);
  turn.work = wc.similarity_evaluations;
  turn.centroid_work = centroid_work;
  return {std::move(turn), std::move(s)};
}

int i0_size(const IvfSession& session, std::span<const float> q, WorkCounter& wc) {
  if (session.cached_index.empty()) {
    throw std::logic_error("i0_size: session not opened");
  }
  const std::vector<float> scores = score_cache(session, q, wc);
  const auto slots = top_cache_slots(session, scores, session.np);
  const auto current = slots_to_sorted_indices(session, slots);
  return intersect_count(current, session.anchor_top);
}

void refresh_ivf_cache(IvfSession& session, const IvfIndex& index,
                       std::span<const float> q, WorkCounter& wc) {
  if (session.cached_index.empty()) {
    throw std::logic_error("refresh_ivf_cache: session not opened");
  }
  const std::vector<float> full = score_centroids(q, index.centroids, wc);
  adopt_cache(session, index, full);
  ++session.refresh_count;
}

TurnResult search_ivf_session(IvfSession& session, const IvfIndex& index,
                              std::span<const float> q, std::size_t k) {
  if (session.cached_index.empty()) {
    throw std::logic_error("search_ivf_session: session not opened");
  }
  if (k == 0) throw std::invalid_argument("search_ivf_session: k must be >= 1");

  WorkCounter wc;
  const std::vector<float> scores = score_cache(session, q, wc);
  const auto slots = top_cache_slots(session, scores, session.np);
  const auto current = slots_to_sorted_indices(session, slots);
  const int i0 = intersect_count(current, session.anchor_top);

  TurnResult turn;
  turn.i0 = i0;

  std::vector<std::uint32_t> probe;
  if (static_cast<double>(i0) < session.alpha * static_cast<double>(session.np)) {
    refresh_ivf_cache(session, index, q, wc);
    turn.refreshed = true;
    // q is the new anchor, so its top-np is the head of the refreshed cache.
    probe.assign(session.cached_index.begin(), session.cached_index.begin() + session.np);
  } else {
    probe.reserve(slots.size());
    for (std::uint32_t slot : slots) probe.push_back(session.cached_index[slot]);
  }
  turn.centroid_work = wc.similarity_evaluations;

  turn.hits = scan_lists(index, q, probe, k, wc);
  turn.work = wc.similarity_evaluations;
  return turn;
}

std::pair<TurnResult, HnswSession> open_hnsw_session(const HnswGraph& graph,
                                                     std::span<const float> q0,
                                                     std::size_t ef, double up,
                                                     std::size_t k) {
  if (up < 1.0) throw std::invalid_argument("open_hnsw_session: up must be >= 1");
  if (ef == 0) throw std::invalid_argument("open_hnsw_session: ef must be >= 1");
  const auto ef_up = static_cast<std::size_t>(
      std::ceil(up * static_cast<double>(ef)));
  if (ef_up < k) {
    throw std::invalid_argument("open_hnsw_session: ceil(up*ef) must be >= k");
  }

  WorkCounter wc;
  TurnResult turn;
  turn.hits = search_hnsw(graph, q0, k, ef_up, wc);
  turn.work = wc.similarity_evaluations;
  if (turn.hits.empty()) {
    throw std::runtime_error("open_hnsw_session: empty result on a non-empty graph");
  }

  HnswSession s;
  s.entry = turn.hits.front().id;
  s.up = up;
  s.first_done = true;
  return {std::move(turn), s};
}

TurnResult search_hnsw_session(const HnswSession& session, const HnswGraph& graph,
                               std::span<const float> q, std::size_t ef, std::size_t k) {
  if (!session.first_done) {
    throw std::logic_error("search_hnsw_session: session not opened");
  }
  WorkCounter wc;
  TurnResult turn;
  turn.hits = search_hnsw_from(graph, q, k, ef, session.entry, wc);
  turn.work = wc.similarity_evaluations;
  return turn;
}

}  // namespace toploc
