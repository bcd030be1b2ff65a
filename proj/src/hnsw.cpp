#include "toploc/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "binio.hpp"
#include "toploc/rng.hpp"

namespace toploc {

namespace {

// Epoch-tagged visited set; reset is O(1) after the first use.
class VisitedTable {
 public:
  void reset(std::size_t n) {
    if (tags_.size() < n) tags_.assign(n, 0);
    ++epoch_;
  }
  bool test_and_set(DocId i) {
    if (tags_[i] == epoch_) return true;
    tags_[i] = epoch_;
    return false;
  }

 private:
  std::vector<std::uint64_t> tags_;
  std::uint64_t epoch_ = 0;
};

struct CandWorse {
  bool operator()(const ScoredHit& a, const ScoredHit& b) const { return hit_better(b, a); }
};
struct CandBetter {
  bool operator()(const ScoredHit& a, const ScoredHit& b) const { return hit_better(a, b); }
};

// Best-first expansion at one layer. Seeds must already be scored and marked
// visited by the caller. Returns up to ef hits sorted best-first.
std::vector<ScoredHit> search_layer(const HnswGraph& graph, std::span<const float> q,
                                    std::span<const ScoredHit> seeds, std::size_t ef,
                                    std::size_t layer, VisitedTable& visited,
                                    WorkCounter& wc) {
  std::priority_queue<ScoredHit, std::vector<ScoredHit>, CandWorse> candidates;  // top = best
  std::priority_queue<ScoredHit, std::vector<ScoredHit>, CandBetter> results;    // top = worst
  for (const ScoredHit& s : seeds) {
    candidates.push(s);
    results.push(s);
    if (results.size() > ef) results.pop();
  }
  while (!candidates.empty()) {
    const ScoredHit c = candidates.top();
    if (results.size() == ef && hit_better(results.top(), c)) break;
    candidates.pop();
    for (DocId e : graph.neighbors[c.id][layer]) {
      if (visited.test_and_set(e)) continue;
      const ScoredHit hit{e, similarity(q, graph.store->row(e), wc)};
      if (results.size() < ef || hit_better(hit, results.top())) {
        candidates.push(hit);
        results.push(hit);
        if (results.size() > ef) results.pop();
      }
    }
  }
  std::vector<ScoredHit> out(results.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = results.top();
    results.pop();
  }
  return out;
}

// Beam-1 greedy walk at one layer; moves while a neighbor improves.
ScoredHit greedy_step(const HnswGraph& graph, std::span<const float> q, ScoredHit cur,
                      std::size_t layer, WorkCounter& wc) {
  bool improved = true;
  while (improved) {
    improved = false;
    for (DocId e : graph.neighbors[cur.id][layer]) {
      const ScoredHit hit{e, similarity(q, graph.store->row(e), wc)};
      if (hit_better(hit, cur)) {
        cur = hit;
        improved = true;
      }
    }
  }
  return cur;
}

// Keep the cap nearest neighbors of node v (plain selection, no heuristic).
void shrink_neighbors(const HnswGraph& graph, DocId v, std::size_t layer,
                      std::vector<DocId>& list, std::size_t cap, WorkCounter& wc) {
  if (list.size() <= cap) return;
  TopKSelector sel(cap);
  const auto vrow = graph.store->row(v);
  for (DocId e : list) sel.offer(e, similarity(vrow, graph.store->row(e), wc));
  auto kept = sel.take_sorted();
  list.clear();
  for (const ScoredHit& h : kept) list.push_back(h.id);
  (void)layer;
}

thread_local VisitedTable t_visited;

}  // namespace

HnswGraph build_hnsw(const VectorStore& store, std::size_t M,
                     std::size_t ef_construction, std::uint64_t seed) {
  if (store.size() == 0) throw std::invalid_argument("build_hnsw: empty store");
  if (M < 2) throw std::invalid_argument("build_hnsw: M must be >= 2");
  if (ef_construction == 0) throw std::invalid_argument("build_hnsw: ef_construction must be >= 1");

  const std::size_t n = store.size();
  const double level_mult = 1.0 / std::log(static_cast<double>(M));

  HnswGraph g;
  g.M = M;
  g.store = &store;
  g.levels.resize(n);
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double u = uniform_unit(gen);
    if (u < 1e-300) u = 1e-300;
    g.levels[i] = static_cast<std::uint32_t>(std::floor(-std::log(u) * level_mult));
  }
  g.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.neighbors[i].resize(g.levels[i] + 1);

  g.global_entry = 0;
  g.max_layer = g.levels[0];

  VisitedTable visited;
  WorkCounter wc;  // build-internal, not reported
  for (DocId i = 1; i < n; ++i) {
    const auto q = store.row(i);
    const std::uint32_t level = g.levels[i];
    ScoredHit cur{g.global_entry, similarity(q, store.row(g.global_entry), wc)};

    for (std::size_t layer = g.max_layer; layer > level; --layer) {
      cur = greedy_step(g, q, cur, layer, wc);
    }

    const std::size_t top = std::min<std::size_t>(level, g.max_layer);
    for (std::size_t layer = top + 1; layer-- > 0;) {
      visited.reset(n);
      visited.test_and_set(cur.id);
      const ScoredHit seed[1] = {cur};
      auto found = search_layer(g, q, seed, ef_construction, layer, visited, wc);

      const std::size_t link = std::min(M, found.size());
      for (std::size_t s = 0; s < link; ++s) {
        const DocId e = found[s].id;
        g.neighbors[i][layer].push_back(e);
        auto& back = g.neighbors[e][layer];
        back.push_back(i);
        shrink_neighbors(g, e, layer, back, g.cap(layer), wc);
      }
      cur = found.front();
    }

    if (level > g.max_layer) {
      g.max_layer = level;
      g.global_entry = i;
    }
  }
  return g;
}

namespace {

std::vector<ScoredHit> finish_layer0(const HnswGraph& graph, std::span<const float> q,
                                     ScoredHit seed, std::size_t k, std::size_t ef,
                                     WorkCounter& wc) {
  t_visited.reset(graph.size());
  t_visited.test_and_set(seed.id);
  const ScoredHit seeds[1] = {seed};
  auto found = search_layer(graph, q, seeds, ef, 0, t_visited, wc);
  if (found.size() > k) found.resize(k);
  return found;
}

}  // namespace

std::vector<ScoredHit> search_hnsw(const HnswGraph& graph, std::span<const float> q,
                                   std::size_t k, std::size_t ef_search, WorkCounter& wc) {
  if (k == 0) throw std::invalid_argument("search_hnsw: k must be >= 1");
  if (ef_search < k) {
    throw std::invalid_argument("search_hnsw: ef_search (" + std::to_string(ef_search) +
                                ") must be >= k (" + std::to_string(k) + ")");
  }
  ScoredHit cur{graph.global_entry, similarity(q, graph.store->row(graph.global_entry), wc)};
  for (std::size_t layer = graph.max_layer; layer > 0; --layer) {
    cur = greedy_step(graph, q, cur, layer, wc);
  }
  return finish_layer0(graph, q, cur, k, ef_search, wc);
}

std::vector<ScoredHit> search_hnsw_from(const HnswGraph& graph, std::span<const float> q,
                                        std::size_t k, std::size_t ef_search, DocId entry,
                                        WorkCounter& wc) {
  if (k == 0) throw std::invalid_argument("search_hnsw_from: k must be >= 1");
  if (ef_search < k) {
    throw std::invalid_argument("search_hnsw_from: ef_search must be >= k");
  }
  if (entry >= graph.size()) {
    throw std::invalid_argument("search_hnsw_from: unknown entry id " + std::to_string(entry));
  }
  ScoredHit seed{entry, similarity(q, graph.store->row(entry), wc)};
  return finish_layer0(graph, q, seed, k, ef_search, wc);
}

void validate_hnsw(const HnswGraph& graph) {
  const std::size_t n = graph.size();
  if (n == 0) throw std::logic_error("hnsw: empty graph");
  if (graph.global_entry >= n) throw std::logic_error("hnsw: entry id out of range");
  if (graph.levels[graph.global_entry] != graph.max_layer) {
    throw std::logic_error("hnsw: global entry is not on the top layer");
  }
  std::uint32_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    top = std::max(top, graph.levels[i]);
    if (graph.neighbors[i].size() != graph.levels[i] + 1) {
      throw std::logic_error("hnsw: node " + std::to_string(i) + " has wrong layer count");
    }
    for (std::size_t layer = 0; layer <= graph.levels[i]; ++layer) {
      const auto& list = graph.neighbors[i][layer];
      if (list.size() > graph.cap(layer)) {
        throw std::logic_error("hnsw: node " + std::to_string(i) + " exceeds cap at layer " +
                               std::to_string(layer));
      }
      for (DocId e : list) {
        if (e >= n) throw std::logic_error("hnsw: neighbor id out of range");
        if (e == i) throw std::logic_error("hnsw: self-loop at node " + std::to_string(i));
        if (graph.levels[e] < layer) {
          throw std::logic_error("hnsw: node " + std::to_string(i) + " links to " +
                                 std::to_string(e) + " below its level");
        }
      }
    }
  }
  if (top != graph.max_layer) throw std::logic_error("hnsw: max_layer inconsistent");
}

std::size_t layer0_reachable_count(const HnswGraph& graph) {
  std::vector<bool> seen(graph.size(), false);
  std::vector<DocId> stack{graph.global_entry};
  seen[graph.global_entry] = true;
  std::size_t count = 0;
  while (!stack.empty()) {
    const DocId v = stack.back();
    stack.pop_back();
    ++count;
    for (DocId e : graph.neighbors[v][0]) {
      if (!seen[e]) {
        seen[e] = true;
        stack.push_back(e);
      }
    }
  }
  return count;
}

void save_hnsw(const HnswGraph& graph, const std::string& path) {
  const std::size_t n = graph.size();
  detail::BinWriter w(path);
  w.magic("TLHNSW1");
  w.u64(graph.store ? graph.store->dim() : 0);
  w.u64(n);
  w.u64(graph.M);
  w.u64(graph.max_layer);
  for (std::size_t i = 0; i < n; ++i) w.u64(graph.levels[i]);
  for (std::size_t layer = 0; layer <= graph.max_layer; ++layer) {
    std::vector<std::uint64_t> offsets(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t deg =
          layer <= graph.levels[i] ? graph.neighbors[i][layer].size() : 0;
      offsets[i + 1] = offsets[i] + deg;
    }
    w.u64_array(offsets);
    for (std::size_t i = 0; i < n; ++i) {
      if (layer <= graph.levels[i]) w.u64_array(graph.neighbors[i][layer]);
    }
  }
  w.u64(graph.global_entry);
  w.close();
}

HnswGraph load_hnsw(const std::string& path, const VectorStore& store) {
  detail::BinReader r(path);
  r.expect_magic("TLHNSW1");
  const std::uint64_t d = r.u64();
  const std::uint64_t n = r.u64();
  const std::uint64_t m = r.u64();
  const std::uint64_t max_layer = r.u64();
  if (d != store.dim()) r.fail("graph dimensionality does not match store");
  if (n != store.size()) r.fail("graph row count does not match store");
  if (m < 2) r.fail("invalid M");

  HnswGraph g;
  g.M = m;
  g.max_layer = max_layer;
  g.store = &store;
  g.levels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t level = r.u64();
    if (level > max_layer) r.fail("node level above max_layer");
    g.levels[i] = static_cast<std::uint32_t>(level);
  }
  g.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.neighbors[i].resize(g.levels[i] + 1);

  std::vector<std::uint64_t> offsets(n + 1);
  for (std::size_t layer = 0; layer <= max_layer; ++layer) {
    r.u64_array(offsets);
    for (std::size_t i = 0; i < n; ++i) {
      if (offsets[i + 1] < offsets[i]) r.fail("offsets not monotone");
      const std::uint64_t deg = offsets[i + 1] - offsets[i];
      if (layer > g.levels[i]) {
        if (deg != 0) r.fail("adjacency present above node level");
        continue;
      }
      if (deg > g.cap(layer)) r.fail("adjacency exceeds cap");
      auto& list = g.neighbors[i][layer];
      list.resize(deg);
      r.u64_array(list);
      for (DocId e : list) {
        if (e >= n) r.fail("neighbor id out of range");
      }
    }
  }
  g.global_entry = r.u64();
  if (g.global_entry >= n) r.fail("entry id out of range");
  r.expect_eof();
  try {
    validate_hnsw(g);
  } catch (const std::logic_error& e) {
    throw std::runtime_error("parse error in '" + path + "': " + e.what());
  }
  return g;
}

}  // namespace toploc
