#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toploc/core.hpp"
#include "toploc/metrics.hpp"

namespace toploc {

// One conversation: ordered turns, each referencing a row of the query
// embedding store. Topic ids are "<conversation_id>_<turn_id>".
struct Conversation {
  struct Turn {
    std::string id;
    DocId query_row = 0;
  };
  std::string id;
  std::vector<Turn> turns;

  static std::string topic_of(const std::string& conv_id, const std::string& turn_id) {
    return conv_id + "_" + turn_id;
  }
};

// Binary vector file: magic "TLVEC1", n and d as little-endian u64, n*d
// float32 row-major, then n ids (u32 length prefix + UTF-8 bytes).
VectorStore read_vectors(const std::string& path);
void write_vectors(const VectorStore& store, const std::string& path);

// Tab-separated lines: conversation_id <TAB> turn_id <TAB> embedding_id.
// Every embedding_id must exist in the query store; turn ids must be unique
// within a conversation.
std::vector<Conversation> read_conversations(const std::string& path,
                                             const VectorStore& query_store);
void write_conversations(const std::vector<Conversation>& convs,
                         const VectorStore& query_store, const std::string& path);

// Whitespace-separated "topic 0 docid grade" lines. Later duplicates override
// earlier ones with a warning; grades outside {0,1,2} warn but are accepted.
Qrels read_qrels(const std::string& path);
void write_qrels(const Qrels& qrels, const std::string& path);

// TREC format: "topic Q0 docid rank score tag", rank from 1, six-decimal
// fixed-point scores.
void write_run(const RankedRun& run, const std::string& tag, const std::string& path);
RankedRun read_run(const std::string& path);

// Deterministic clustered workload. Documents are Gaussian cluster samples,
// L2-normalized. Each conversation anchors in one cluster; queries drift by
// drift*sigma per turn, with an optional hard jump to another cluster at turn
// number shift_at (1-based). Qrels mark each turn's exact top-10 neighbors
// grade 2.
struct SyntheticSpec {
  std::size_t n = 100000;
  std::size_t d = 128;
  std::size_t clusters = 256;
  double sigma = 0.05;
  std::size_t conversations = 50;
  std::size_t turns_per_conversation = 8;
  double drift = 0.05;
  long long shift_at = -1;  // 1-based turn number; -1 disables the jump
  std::uint64_t seed = 42;
};

struct SyntheticData {
  VectorStore corpus;
  VectorStore queries;  // ids are topic ids
  std::vector<Conversation> conversations;
  Qrels qrels;
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

}  // namespace toploc
