#include "toploc/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "toploc/rng.hpp"

namespace toploc {

namespace {

constexpr std::size_t kCentroidBlock = 256;
constexpr std::size_t kPointBlock = 8;

// Dot product with eight independent partial sums. Training-internal fast
// path; the sequential `similarity` stays the semantic reference.
float dot8(const float* a, const float* b, std::size_t d) {
  float s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t t = 0;
  for (; t + 8 <= d; t += 8) {
    for (std::size_t l = 0; l < 8; ++l) s[l] += a[t + l] * b[t + l];
  }
  for (; t < d; ++t) s[0] += a[t] * b[t];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

std::vector<float> transpose_centroids(const std::vector<float>& c, std::size_t p,
                                       std::size_t d) {
  std::vector<float> ct(p * d);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t t = 0; t < d; ++t) ct[t * p + j] = c[j * d + t];
  }
  return ct;
}

// argmax_j (dot(x, C_j) - bias[j]) for every row, lowest index on ties. With
// bias[j] = ||C_j||^2 / 2 this is the squared-Euclidean argmin; with zero
// bias it is the dot-product argmax. Points run in blocks of eight so each
// transposed centroid cache line is loaded once per block, not once per
// point; the inner centroid loop vectorizes.
void assign_blocked(const VectorStore& store, const std::vector<float>& centroids,
                    std::size_t p, const std::vector<float>& bias,
                    std::vector<std::uint32_t>& out) {
  const std::size_t d = store.dim();
  const std::size_t n = store.size();
  const std::vector<float> ct = transpose_centroids(centroids, p, d);
  out.resize(n);

  std::vector<float> acc(kPointBlock * kCentroidBlock);
  std::vector<float> best(kPointBlock);
  std::vector<std::uint32_t> best_j(kPointBlock);
  for (std::size_t i0 = 0; i0 < n; i0 += kPointBlock) {
    const std::size_t nb = std::min(kPointBlock, n - i0);
    std::fill(best.begin(), best.end(), -std::numeric_limits<float>::infinity());
    std::fill(best_j.begin(), best_j.end(), 0u);
    for (std::size_t j0 = 0; j0 < p; j0 += kCentroidBlock) {
      const std::size_t w = std::min(kCentroidBlock, p - j0);
      std::fill(acc.begin(), acc.begin() + nb * w, 0.0f);
      for (std::size_t t = 0; t < d; ++t) {
        const float* row = ct.data() + t * p + j0;
        for (std::size_t b = 0; b < nb; ++b) {
          const float xt = store.raw()[(i0 + b) * d + t];
          float* a = acc.data() + b * w;
          for (std::size_t j = 0; j < w; ++j) a[j] += xt * row[j];
        }
      }
      for (std::size_t b = 0; b < nb; ++b) {
        const float* a = acc.data() + b * w;
        for (std::size_t j = 0; j < w; ++j) {
          const float s = a[j] - bias[j0 + j];
          if (s > best[b]) {
            best[b] = s;
            best_j[b] = static_cast<std::uint32_t>(j0 + j);
          }
        }
      }
    }
    for (std::size_t b = 0; b < nb; ++b) out[i0 + b] = best_j[b];
  }
}

double sq_euclidean(std::span<const float> a, std::span<const float> b) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t t = 0;
  const std::size_t d = a.size();
  for (; t + 4 <= d; t += 4) {
    const double d0 = double(a[t]) - double(b[t]);
    const double d1 = double(a[t + 1]) - double(b[t + 1]);
    const double d2 = double(a[t + 2]) - double(b[t + 2]);
    const double d3 = double(a[t + 3]) - double(b[t + 3]);
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; t < d; ++t) {
    const double dd = double(a[t]) - double(b[t]);
    s0 += dd * dd;
  }
  return (s0 + s1) + (s2 + s3);
}

// k-means++ with distances via the norm expansion ||x||^2 - 2<x,c> + ||c||^2
// so each round is a bank of independent-accumulator dot products.
std::vector<float> plus_plus_seed(const VectorStore& store, std::size_t p,
                                  std::mt19937_64& gen) {
  const std::size_t n = store.size();
  const std::size_t d = store.dim();
  const float* data = store.raw().data();
  std::vector<float> centroids(p * d);
  std::vector<float> min_dist(n, std::numeric_limits<float>::infinity());
  std::vector<float> xnorm2(n);
  for (std::size_t i = 0; i < n; ++i) xnorm2[i] = dot8(data + i * d, data + i * d, d);

  std::size_t first = uniform_index(gen, n);
  std::copy_n(store.row(first).data(), d, centroids.begin());

  for (std::size_t c = 1; c <= p; ++c) {
    const float* latest = centroids.data() + (c - 1) * d;
    const float cnorm2 = dot8(latest, latest, d);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      float dist = xnorm2[i] - 2.0f * dot8(data + i * d, latest, d) + cnorm2;
      if (dist < 0.0f) dist = 0.0f;
      if (dist < min_dist[i]) min_dist[i] = dist;
      total += min_dist[i];
    }
    if (c == p) break;
    std::size_t pick;
    if (total <= 0.0) {
      pick = uniform_index(gen, n);  // all remaining mass zero (duplicate points)
    } else {
      const double r = uniform_unit(gen) * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += min_dist[i];
        if (cum >= r) {
          pick = i;
          break;
        }
      }
    }
    std::copy_n(store.row(pick).data(), d, centroids.begin() + c * d);
  }
  return centroids;
}

std::vector<float> half_sq_norms(const std::vector<float>& c, std::size_t p, std::size_t d) {
  std::vector<float> bias(p);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      const double v = c[j * d + t];
      s += v * v;
    }
    bias[j] = static_cast<float>(0.5 * s);
  }
  return bias;
}

// Recomputes means; empty clusters steal the farthest point of the largest
// cluster. Returns true when any repair happened.
bool update_centroids(const VectorStore& store, const std::vector<std::uint32_t>& assign,
                      std::size_t p, std::vector<float>& centroids) {
  const std::size_t d = store.dim();
  const std::size_t n = store.size();
  std::vector<double> sums(p * d, 0.0);
  std::vector<std::size_t> counts(p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t j = assign[i];
    const float* x = store.raw().data() + i * d;
    double* s = sums.data() + std::size_t(j) * d;
    for (std::size_t t = 0; t < d; ++t) s[t] += x[t];
    ++counts[j];
  }

  // Track members lazily only if a repair is needed.
  bool repaired = false;
  std::vector<std::uint32_t> working = assign;
  for (std::size_t j = 0; j < p; ++j) {
    if (counts[j] > 0) continue;
    repaired = true;
    // Donor: largest cluster, lowest index on ties.
    std::size_t donor = 0;
    for (std::size_t l = 1; l < p; ++l) {
      if (counts[l] > counts[donor]) donor = l;
    }
    if (counts[donor] <= 1) break;  // nothing left to steal
    // Farthest member of the donor from the donor's current mean.
    std::vector<double> mean(d);
    for (std::size_t t = 0; t < d; ++t) mean[t] = sums[donor * d + t] / double(counts[donor]);
    std::vector<float> meanf(mean.begin(), mean.end());
    double far_dist = -1.0;
    std::size_t far_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (working[i] != donor) continue;
      const double dist = sq_euclidean(store.row(i), meanf);
      if (dist > far_dist) {
        far_dist = dist;
        far_i = i;
      }
    }
    const float* x = store.raw().data() + far_i * d;
    for (std::size_t t = 0; t < d; ++t) {
      sums[donor * d + t] -= x[t];
      sums[j * d + t] += x[t];
    }
    --counts[donor];
    ++counts[j];
    working[far_i] = static_cast<std::uint32_t>(j);
  }

  for (std::size_t j = 0; j < p; ++j) {
    if (counts[j] == 0) continue;
    const double inv = 1.0 / double(counts[j]);
    for (std::size_t t = 0; t < d; ++t) {
      centroids[j * d + t] = static_cast<float>(sums[j * d + t] * inv);
    }
  }
  return repaired;
}

}  // namespace

CentroidSet train_kmeans(const VectorStore& store, std::size_t p,
                         std::size_t max_iters, std::uint64_t seed) {
  const std::size_t n = store.size();
  if (p == 0) throw std::invalid_argument("train_kmeans: p must be >= 1");
  if (p > n) {
    throw std::invalid_argument("train_kmeans: p (" + std::to_string(p) +
                                ") exceeds store size (" + std::to_string(n) + ")");
  }
  if (max_iters == 0) throw std::invalid_argument("train_kmeans: max_iters must be >= 1");

  std::mt19937_64 gen(seed);
  std::vector<float> centroids = plus_plus_seed(store, p, gen);

  std::vector<std::uint32_t> assign;
  std::vector<std::uint32_t> next;
  assign_blocked(store, centroids, p, half_sq_norms(centroids, p, store.dim()), assign);

  for (std::size_t it = 0; it < max_iters; ++it) {
    const bool repaired = update_centroids(store, assign, p, centroids);
    assign_blocked(store, centroids, p, half_sq_norms(centroids, p, store.dim()), next);
    const bool changed = (next != assign);
    assign.swap(next);
    if (!changed && !repaired) break;
  }

  CentroidSet out;
  out.dim = store.dim();
  out.data = std::move(centroids);
  return out;
}

PostingLists assign_lists(const VectorStore& store, const CentroidSet& centroids) {
  if (centroids.dim != store.dim()) {
    throw std::invalid_argument("assign_lists: dimension mismatch");
  }
  const std::size_t p = centroids.size();
  if (p == 0) throw std::invalid_argument("assign_lists: empty centroid set");
  std::vector<std::uint32_t> assign;
  const std::vector<float> no_bias(p, 0.0f);
  assign_blocked(store, centroids.data, p, no_bias, assign);
  PostingLists out;
  out.lists.resize(p);
  for (std::size_t i = 0; i < store.size(); ++i) {
    out.lists[assign[i]].push_back(static_cast<DocId>(i));
  }
  return out;
}

std::vector<float> score_centroids(std::span<const float> q, const CentroidSet& centroids,
                                   WorkCounter& wc) {
  std::vector<float> scores(centroids.size());
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    scores[j] = similarity(q, centroids.row(j), wc);
  }
  return scores;
}

}  // namespace toploc
