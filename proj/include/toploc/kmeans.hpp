#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "toploc/core.hpp"

namespace toploc {

struct CentroidSet {
  std::size_t dim = 0;
  std::vector<float> data;  // p x dim, row-major

  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
};

// Lists partition the store's row ids; list i holds the rows whose best
// centroid (dot product, ascending-index tie-break) is i.
struct PostingLists {
  std::vector<std::vector<DocId>> lists;
  std::size_t size() const noexcept { return lists.size(); }
};

// Lloyd k-means with k-means++ seeding from the given seed. Training
// minimizes squared Euclidean distance; assignment of the returned partition
// is by dot product (see assign_lists). Deterministic for fixed inputs.
// Stops early when an assignment pass changes nothing. Empty clusters steal
// the farthest point of the largest cluster.
CentroidSet train_kmeans(const VectorStore& store, std::size_t p,
                         std::size_t max_iters, std::uint64_t seed);

// Nearest-by-dot-product assignment of every row, lowest index on ties.
PostingLists assign_lists(const VectorStore& store, const CentroidSet& centroids);

// Scores q against every centroid; counts centroids.size() evaluations.
std::vector<float> score_centroids(std::span<const float> q, const CentroidSet& centroids,
                                   WorkCounter& wc);

}  // namespace toploc
