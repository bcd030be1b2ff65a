#include "toploc/ivf.hpp"

#include <cmath>
#include <stdexcept>

#include "binio.hpp"

namespace toploc {

IvfIndex build_ivf(const VectorStore& store, std::size_t p, std::size_t max_iters,
                   std::uint64_t seed) {
  IvfIndex index;
  index.centroids = train_kmeans(store, p, max_iters, seed);
  index.lists = assign_lists(store, index.centroids);
  index.store = &store;
  return index;
}

std::vector<ScoredHit> scan_lists(const IvfIndex& index, std::span<const float> q,
                                  std::span<const std::uint32_t> probe, std::size_t k,
                                  WorkCounter& wc) {
  TopKSelector sel(k);
  for (std::uint32_t c : probe) {
    for (DocId id : index.lists.lists[c]) {
      sel.offer(id, similarity(q, index.store->row(id), wc));
    }
  }
  return sel.take_sorted();
}

std::vector<ScoredHit> search_ivf(const IvfIndex& index, std::span<const float> q,
                                  std::size_t k, std::size_t np, WorkCounter& wc) {
  if (k == 0) throw std::invalid_argument("search_ivf: k must be >= 1");
  if (np == 0 || np > index.p()) {
    throw std::invalid_argument("search_ivf: np (" + std::to_string(np) +
                                ") must be in [1, " + std::to_string(index.p()) + "]");
  }
  const std::vector<float> scores = score_centroids(q, index.centroids, wc);
  const std::vector<std::uint32_t> probe = top_indices(scores, np);
  return scan_lists(index, q, probe, k, wc);
}

void save_ivf(const IvfIndex& index, const std::string& path) {
  const std::size_t p = index.p();
  detail::BinWriter w(path);
  w.magic("TLIVF1");
  w.u64(index.centroids.dim);
  w.u64(index.store ? index.store->size() : 0);
  w.u64(p);
  w.f32_array(index.centroids.data);
  std::vector<std::uint64_t> lengths(p);
  for (std::size_t i = 0; i < p; ++i) lengths[i] = index.lists.lists[i].size();
  w.u64_array(lengths);
  for (std::size_t i = 0; i < p; ++i) w.u64_array(index.lists.lists[i]);
  w.close();
}

IvfIndex load_ivf(const std::string& path, const VectorStore& store) {
  detail::BinReader r(path);
  r.expect_magic("TLIVF1");
  const std::uint64_t d = r.u64();
  const std::uint64_t n = r.u64();
  const std::uint64_t p = r.u64();
  if (d != store.dim()) r.fail("index dimensionality " + std::to_string(d) +
                               " does not match store (" + std::to_string(store.dim()) + ")");
  if (n != store.size()) r.fail("index row count " + std::to_string(n) +
                                " does not match store (" + std::to_string(store.size()) + ")");
  if (p == 0 || p > n) r.fail("invalid partition count " + std::to_string(p));

  IvfIndex index;
  index.centroids.dim = d;
  index.centroids.data.resize(p * d);
  r.f32_array(index.centroids.data);
  for (float v : index.centroids.data) {
    if (!std::isfinite(v)) r.fail("non-finite centroid value");
  }

  std::vector<std::uint64_t> lengths(p);
  r.u64_array(lengths);
  std::uint64_t total = 0;
  for (std::uint64_t len : lengths) total += len;
  if (total != n) r.fail("list lengths sum to " + std::to_string(total) +
                         ", expected " + std::to_string(n));

  index.lists.lists.resize(p);
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < p; ++i) {
    auto& list = index.lists.lists[i];
    list.resize(lengths[i]);
    r.u64_array(list);
    for (DocId id : list) {
      if (id >= n) r.fail("row id " + std::to_string(id) + " out of range");
      if (seen[id]) r.fail("row id " + std::to_string(id) + " appears in two lists");
      seen[id] = true;
    }
  }
  r.expect_eof();
  index.store = &store;
  return index;
}

}  // namespace toploc
