#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toploc/core.hpp"
#include "toploc/kmeans.hpp"

namespace toploc {

// Inverted file index: centroids plus posting lists partitioning the store.
// Immutable after build; concurrent searches are safe, each with its own
// WorkCounter.
struct IvfIndex {
  CentroidSet centroids;
  PostingLists lists;
  const VectorStore* store = nullptr;

  std::size_t p() const noexcept { return centroids.size(); }
};

IvfIndex build_ivf(const VectorStore& store, std::size_t p, std::size_t max_iters,
                   std::uint64_t seed);

// Scores all p centroids, scans the np best lists, returns the top-k of the
// scanned union. Work: p + sum of probed list sizes. If the probed union
// holds fewer than k points, returns all of them.
std::vector<ScoredHit> search_ivf(const IvfIndex& index, std::span<const float> q,
                                  std::size_t k, std::size_t np, WorkCounter& wc);

// Top-k over the lists of the given centroids (already-selected probe set).
std::vector<ScoredHit> scan_lists(const IvfIndex& index, std::span<const float> q,
                                  std::span<const std::uint32_t> probe, std::size_t k,
                                  WorkCounter& wc);

// Binary persistence. Header: magic "TLIVF1", then d, n, p as little-endian
// u64; centroid matrix (p x d float32); list lengths (p x u64); concatenated
// row ids (u64). Load validates shape against the given store.
void save_ivf(const IvfIndex& index, const std::string& path);
IvfIndex load_ivf(const std::string& path, const VectorStore& store);

}  // namespace toploc
