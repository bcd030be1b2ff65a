#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "toploc/hnsw.hpp"
#include "toploc/rng.hpp"

using namespace toploc;

namespace {

// Clustered, normalized store for graph-quality checks.
VectorStore clustered_store(std::size_t n, std::size_t d, std::size_t clusters, double sigma,
                            std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<float> centers(clusters * d);
  for (auto& v : centers) v = static_cast<float>(gaussian(gen));
  VectorStore raw(d, n);
  std::vector<float> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % clusters;
    for (std::size_t t = 0; t < d; ++t) {
      row[t] = centers[c * d + t] + static_cast<float>(sigma * gaussian(gen));
    }
    raw.add("n" + std::to_string(100000 + i), row);
  }
  return normalize_l2(raw);
}

}  // namespace

TEST_CASE("build_hnsw: single point graph") {
  VectorStore store(4, 1);
  store.add("only", std::vector<float>{1, 0, 0, 0});
  const auto g = build_hnsw(store, 4, 16, 1);
  CHECK(g.size() == 1);
  CHECK(g.global_entry == 0);
  for (const auto& layer : g.neighbors[0]) CHECK(layer.empty());
  validate_hnsw(g);

  WorkCounter wc;
  const std::vector<float> q{0, 1, 0, 0};
  const auto hits = search_hnsw(g, q, 1, 8, wc);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id == 0);
}

TEST_CASE("build_hnsw: invariants and reachability on a random graph") {
  const auto store = oracle::random_store(1000, 16, 81, /*normalize=*/true);
  const auto g = build_hnsw(store, 16, 100, 2);
  validate_hnsw(g);
  CHECK(layer0_reachable_count(g) == store.size());
  CHECK(g.levels[g.global_entry] == g.max_layer);
}

TEST_CASE("build_hnsw: same seed gives identical graphs") {
  const auto store = oracle::random_store(400, 8, 82, /*normalize=*/true);
  const auto a = build_hnsw(store, 8, 60, 77);
  const auto b = build_hnsw(store, 8, 60, 77);
  CHECK(a.max_layer == b.max_layer);
  CHECK(a.global_entry == b.global_entry);
  CHECK(a.levels == b.levels);
  REQUIRE(a.neighbors.size() == b.neighbors.size());
  for (std::size_t i = 0; i < a.neighbors.size(); ++i) {
    CHECK(a.neighbors[i] == b.neighbors[i]);
  }
}

TEST_CASE("build_hnsw: input validation") {
  VectorStore empty(4);
  CHECK_THROWS_AS(build_hnsw(empty, 8, 60, 1), std::invalid_argument);
  VectorStore one(4, 1);
  one.add("x", std::vector<float>{1, 0, 0, 0});
  CHECK_THROWS_AS(build_hnsw(one, 1, 60, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_hnsw(one, 8, 0, 1), std::invalid_argument);
}

TEST_CASE("search_hnsw: near-exhaustive expansion matches the oracle") {
  const auto store = oracle::random_store(200, 8, 83, /*normalize=*/true);
  const auto g = build_hnsw(store, 8, 100, 3);
  std::mt19937_64 gen(84);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = oracle::random_query(8, gen, /*normalize=*/true);
    WorkCounter wc;
    auto got = oracle::ids_of(search_hnsw(g, q, 10, store.size(), wc));
    auto want = oracle::ids_of(oracle::brute_top_k(q, store, 10));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got == want) ++agree;
  }
  CHECK(agree >= 99);
}

TEST_CASE("search_hnsw: stored vectors retrieve themselves") {
  const auto store = clustered_store(1000, 16, 10, 0.2, 85);
  const auto g = build_hnsw(store, 16, 100, 4);
  int hits_self = 0;
  for (DocId i = 0; i < 100; ++i) {
    const auto q = store.row(i * 7 % store.size());
    WorkCounter wc;
    const auto hits = search_hnsw(g, std::vector<float>(q.begin(), q.end()), 1, 64, wc);
    REQUIRE(!hits.empty());
    if (hits[0].id == i * 7 % store.size()) ++hits_self;
  }
  CHECK(hits_self >= 95);
}

TEST_CASE("search_hnsw: recall non-decreasing in ef") {
  const auto store = clustered_store(2000, 16, 16, 0.25, 86);
  const auto g = build_hnsw(store, 16, 100, 5);
  std::mt19937_64 gen(87);
  std::vector<std::vector<float>> queries;
  for (int i = 0; i < 200; ++i) queries.push_back(oracle::random_query(16, gen, true));

  double prev = -1.0;
  for (std::size_t ef : {8, 32, 128, 512}) {
    const std::size_t k = std::min<std::size_t>(10, ef);
    double sum = 0.0;
    for (const auto& q : queries) {
      WorkCounter wc;
      const auto got = oracle::ids_of(search_hnsw(g, q, k, ef, wc));
      const auto want = oracle::ids_of(oracle::brute_top_k(q, store, 10));
      sum += oracle::recall(got, want);
    }
    const double mean = sum / queries.size();
    CHECK(mean >= prev - 0.01);
    prev = mean;
  }
}

TEST_CASE("search_hnsw_from: seeding with the true neighbor keeps it") {
  const auto store = oracle::random_store(500, 8, 88, /*normalize=*/true);
  const auto g = build_hnsw(store, 8, 80, 6);
  std::mt19937_64 gen(89);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = oracle::random_query(8, gen, true);
    const auto truth = oracle::brute_top_k(q, store, 1);
    WorkCounter wc;
    const auto hits = search_hnsw_from(g, q, 10, 16, truth[0].id, wc);
    bool present = false;
    for (const auto& h : hits) present = present || h.id == truth[0].id;
    CHECK(present);
  }
}

TEST_CASE("search_hnsw_from: entry at the descent endpoint tracks full search") {
  // Overlapping clusters: the layer-0 graph stays well connected, isolating
  // the effect of skipping the descent itself.
  const auto store = clustered_store(1000, 16, 8, 0.8, 90);
  const auto g = build_hnsw(store, 16, 100, 7);
  std::mt19937_64 gen(91);
  double recall_full = 0.0, recall_from = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = oracle::random_query(16, gen, true);
    const auto want = oracle::ids_of(oracle::brute_top_k(q, store, 10));
    WorkCounter wc1, wc2;
    recall_full += oracle::recall(oracle::ids_of(search_hnsw(g, q, 10, 64, wc1)), want);
    recall_from += oracle::recall(
        oracle::ids_of(search_hnsw_from(g, q, 10, 64, g.global_entry, wc2)), want);
  }
  recall_full /= 100.0;
  recall_from /= 100.0;
  CHECK(std::fabs(recall_full - recall_from) <= 0.05);
}

TEST_CASE("search_hnsw_from: good entries cost less than full descent") {
  const auto store = clustered_store(1000, 16, 8, 0.15, 92);
  const auto g = build_hnsw(store, 16, 100, 8);
  std::mt19937_64 gen(93);
  std::vector<std::uint64_t> full_work, from_work;
  for (int trial = 0; trial < 100; ++trial) {
    // Query near a stored point; that point is the privileged entry.
    const DocId anchor = uniform_index(gen, store.size());
    std::vector<float> q(store.row(anchor).begin(), store.row(anchor).end());
    WorkCounter wc1, wc2;
    (void)search_hnsw(g, q, 10, 64, wc1);
    (void)search_hnsw_from(g, q, 10, 64, anchor, wc2);
    full_work.push_back(wc1.similarity_evaluations);
    from_work.push_back(wc2.similarity_evaluations);
  }
  std::sort(full_work.begin(), full_work.end());
  std::sort(from_work.begin(), from_work.end());
  CHECK(from_work[50] < full_work[50]);
}

TEST_CASE("search_hnsw: parameter validation") {
  const auto store = oracle::random_store(50, 4, 94, /*normalize=*/true);
  const auto g = build_hnsw(store, 4, 30, 9);
  std::mt19937_64 gen(95);
  const auto q = oracle::random_query(4, gen);
  WorkCounter wc;
  CHECK_THROWS_AS(search_hnsw(g, q, 10, 5, wc), std::invalid_argument);
  CHECK_THROWS_AS(search_hnsw(g, q, 0, 5, wc), std::invalid_argument);
  CHECK_THROWS_AS(search_hnsw_from(g, q, 5, 10, 50, wc), std::invalid_argument);
}

TEST_CASE("hnsw persistence: round-trip and corruption") {
  const auto store = oracle::random_store(300, 8, 96, /*normalize=*/true);
  const auto g = build_hnsw(store, 8, 60, 10);
  const std::string path = "/tmp/toploc_test_hnsw.idx";
  save_hnsw(g, path);

  const auto loaded = load_hnsw(path, store);
  CHECK(loaded.M == g.M);
  CHECK(loaded.max_layer == g.max_layer);
  CHECK(loaded.global_entry == g.global_entry);
  CHECK(loaded.levels == g.levels);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(loaded.neighbors[i] == g.neighbors[i]);

  std::mt19937_64 gen(97);
  const auto q = oracle::random_query(8, gen, true);
  WorkCounter wc1, wc2;
  CHECK(oracle::ids_of(search_hnsw(g, q, 5, 32, wc1)) ==
        oracle::ids_of(search_hnsw(loaded, q, 5, 32, wc2)));
  CHECK(wc1.similarity_evaluations == wc2.similarity_evaluations);

  SUBCASE("truncation reports an offset") {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 64));
    out.close();
    CHECK_THROWS_WITH_AS(load_hnsw(path, store), doctest::Contains("byte offset"),
                         std::runtime_error);
  }
  std::remove(path.c_str());
}
