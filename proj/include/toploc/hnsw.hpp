#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toploc/core.hpp"

namespace toploc {

// Layered proximity graph. Adjacency lists hold at most M neighbors per node
// per layer, 2M at layer 0. Immutable after build; concurrent read-only
// searches are safe.
struct HnswGraph {
  std::size_t M = 16;
  std::size_t max_layer = 0;
  DocId global_entry = 0;
  std::vector<std::uint32_t> levels;                    // highest layer per node
  std::vector<std::vector<std::vector<DocId>>> neighbors;  // [node][layer]
  const VectorStore* store = nullptr;

  std::size_t size() const noexcept { return levels.size(); }
  std::size_t cap(std::size_t layer) const noexcept { return layer == 0 ? 2 * M : M; }
};

// Inserts rows in store order. Node levels are floor(-ln(u) / ln(M)) with u
// drawn from the seeded generator. Neighbor selection is plain nearest-M
// (no pruning heuristic). Deterministic for fixed inputs.
HnswGraph build_hnsw(const VectorStore& store, std::size_t M,
                     std::size_t ef_construction, std::uint64_t seed);

// Greedy descent from the global entry through layers > 0, then best-first
// expansion at layer 0 with candidate capacity ef_search. Counts every
// similarity evaluation, upper layers included. Requires ef_search >= k.
std::vector<ScoredHit> search_hnsw(const HnswGraph& graph, std::span<const float> q,
                                   std::size_t k, std::size_t ef_search, WorkCounter& wc);

// Same as search_hnsw but seeds the layer-0 expansion directly with `entry`;
// no upper-layer descent happens.
std::vector<ScoredHit> search_hnsw_from(const HnswGraph& graph, std::span<const float> q,
                                        std::size_t k, std::size_t ef_search, DocId entry,
                                        WorkCounter& wc);

// Throws std::logic_error on any structural violation (list caps, neighbor
// levels, entry level, id ranges, self-loops).
void validate_hnsw(const HnswGraph& graph);

// Nodes reachable from global_entry in the layer-0 subgraph.
std::size_t layer0_reachable_count(const HnswGraph& graph);

// Binary persistence. Header: magic "TLHNSW1", then d, n, M, max_layer as
// little-endian u64; node level array (n x u64); per layer 0..max_layer a CSR
// block (n+1 offsets, then neighbor ids, u64 each); global_entry id.
void save_hnsw(const HnswGraph& graph, const std::string& path);
HnswGraph load_hnsw(const std::string& path, const VectorStore& store);

}  // namespace toploc
