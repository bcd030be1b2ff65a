#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace toploc {

// Row index into a VectorStore. Search code ranks and returns these; the
// mapping to external string ids happens at the I/O boundary.
using DocId = std::uint64_t;

// Counts vector-pair scorings. One counter per in-flight query, never shared.
struct WorkCounter {
  std::uint64_t similarity_evaluations = 0;
};

struct ScoredHit {
  DocId id = 0;
  float score = 0.0f;
};

// Total order used everywhere results are ranked: descending score,
// ascending id on exact score ties.
inline bool hit_better(const ScoredHit& a, const ScoredHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

// Dot product with sequential float32 multiply-accumulate in index order.
// This is the semantic reference for all similarity scoring; counts one
// evaluation. Throws std::invalid_argument on dimension mismatch.
float similarity(std::span<const float> q, std::span<const float> x, WorkCounter& wc);

// Immutable after construction; safe to read from many threads.
class VectorStore {
 public:
  explicit VectorStore(std::size_t dim);
  VectorStore(std::size_t dim, std::size_t expected_rows);

  // Validates row length, finiteness, and id uniqueness.
  void add(std::string id, std::span<const float> row);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const float> row(DocId i) const;
  const std::string& id_of(DocId i) const;
  std::optional<DocId> find(const std::string& id) const;
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& raw() const noexcept { return data_; }

 private:
  std::size_t dim_;
  std::vector<float> data_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, DocId> by_id_;
};

// Returns a copy whose rows all have unit Euclidean norm; ids and order are
// preserved. A zero-norm row raises std::invalid_argument naming its id.
VectorStore normalize_l2(const VectorStore& in);

// Bounded selection of the k best (score, id) pairs under hit_better.
// Root of the internal heap is the worst kept hit.
class TopKSelector {
 public:
  explicit TopKSelector(std::size_t k);
  void offer(DocId id, float score);
  bool full() const noexcept { return heap_.size() == k_; }
  // Drains the heap; result sorted best-first.
  std::vector<ScoredHit> take_sorted();

 private:
  std::size_t k_;
  std::vector<ScoredHit> heap_;
};

// Top-k of the whole store. Counts exactly store.size() evaluations.
std::vector<ScoredHit> top_k(std::span<const float> q, const VectorStore& store,
                             std::size_t k, WorkCounter& wc);

// Top-k over a subset of rows. Counts exactly subset.size() evaluations.
// An empty subset yields an empty result.
std::vector<ScoredHit> top_k(std::span<const float> q, std::span<const DocId> subset,
                             const VectorStore& store, std::size_t k, WorkCounter& wc);

// Indices of the k largest scores, descending score, ascending index on ties.
std::vector<std::uint32_t> top_indices(std::span<const float> scores, std::size_t k);

}  // namespace toploc
