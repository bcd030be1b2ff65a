#include "toploc/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace toploc {

float similarity(std::span<const float> q, std::span<const float> x, WorkCounter& wc) {
  if (q.size() != x.size()) {
    throw std::invalid_argument("similarity: dimension mismatch (" +
                                std::to_string(q.size()) + " vs " +
                                std::to_string(x.size()) + ")");
  }
  ++wc.similarity_evaluations;
  float acc = 0.0f;
  for (std::size_t i = 0; i < q.size(); ++i) {
    acc += q[i] * x[i];
  }
  return acc;
}

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("VectorStore: dimensionality must be >= 1");
}

VectorStore::VectorStore(std::size_t dim, std::size_t expected_rows) : VectorStore(dim) {
  data_.reserve(dim * expected_rows);
  ids_.reserve(expected_rows);
  by_id_.reserve(expected_rows);
}

void VectorStore::add(std::string id, std::span<const float> row) {
  if (row.size() != dim_) {
    throw std::invalid_argument("VectorStore::add: row '" + id + "' has length " +
                                std::to_string(row.size()) + ", expected " +
                                std::to_string(dim_));
  }
  for (float v : row) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("VectorStore::add: row '" + id + "' contains a non-finite value");
    }
  }
  auto [it, inserted] = by_id_.emplace(id, static_cast<DocId>(ids_.size()));
  if (!inserted) {
    throw std::invalid_argument("VectorStore::add: duplicate id '" + id + "'");
  }
  data_.insert(data_.end(), row.begin(), row.end());
  ids_.push_back(std::move(id));
}

std::span<const float> VectorStore::row(DocId i) const {
  if (i >= size()) throw std::out_of_range("VectorStore::row: index out of range");
  return {data_.data() + i * dim_, dim_};
}

const std::string& VectorStore::id_of(DocId i) const {
  if (i >= size()) throw std::out_of_range("VectorStore::id_of: index out of range");
  return ids_[i];
}

std::optional<DocId> VectorStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

VectorStore normalize_l2(const VectorStore& in) {
  VectorStore out(in.dim(), in.size());
  std::vector<float> scratch(in.dim());
  for (DocId i = 0; i < in.size(); ++i) {
    auto r = in.row(i);
    double sumsq = 0.0;
    for (float v : r) sumsq += static_cast<double>(v) * static_cast<double>(v);
    if (sumsq == 0.0) {
      throw std::invalid_argument("normalize_l2: zero-norm row '" + in.id_of(i) + "'");
    }
    double inv = 1.0 / std::sqrt(sumsq);
    for (std::size_t j = 0; j < r.size(); ++j) {
      scratch[j] = static_cast<float>(r[j] * inv);
    }
    out.add(in.id_of(i), scratch);
  }
  return out;
}

TopKSelector::TopKSelector(std::size_t k) : k_(k) {
  if (k == 0) throw std::invalid_argument("top_k: k must be >= 1");
  heap_.reserve(k);
}

// With hit_better as the "less" predicate the heap root is the worst kept
// hit, which is exactly the eviction candidate.
void TopKSelector::offer(DocId id, float score) {
  ScoredHit hit{id, score};
  if (heap_.size() < k_) {
    heap_.push_back(hit);
    std::push_heap(heap_.begin(), heap_.end(), hit_better);
    return;
  }
  if (hit_better(hit, heap_.front())) {
    std::pop_heap(heap_.begin(), heap_.end(), hit_better);
    heap_.back() = hit;
    std::push_heap(heap_.begin(), heap_.end(), hit_better);
  }
}

std::vector<ScoredHit> TopKSelector::take_sorted() {
  std::sort_heap(heap_.begin(), heap_.end(), hit_better);
  return std::move(heap_);
}

std::vector<ScoredHit> top_k(std::span<const float> q, const VectorStore& store,
                             std::size_t k, WorkCounter& wc) {
  TopKSelector sel(k);
  for (DocId i = 0; i < store.size(); ++i) {
    sel.offer(i, similarity(q, store.row(i), wc));
  }
  return sel.take_sorted();
}

std::vector<ScoredHit> top_k(std::span<const float> q, std::span<const DocId> subset,
                             const VectorStore& store, std::size_t k, WorkCounter& wc) {
  TopKSelector sel(k);
  for (DocId i : subset) {
    sel.offer(i, similarity(q, store.row(i), wc));
  }
  return sel.take_sorted();
}

std::vector<std::uint32_t> top_indices(std::span<const float> scores, std::size_t k) {
  k = std::min(k, scores.size());
  TopKSelector sel(k == 0 ? 1 : k);
  if (k == 0) return {};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sel.offer(static_cast<DocId>(i), scores[i]);
  }
  auto hits = sel.take_sorted();
  std::vector<std::uint32_t> idx(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) idx[i] = static_cast<std::uint32_t>(hits[i].id);
  return idx;
}

}  // namespace toploc
