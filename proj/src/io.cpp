#include "toploc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include "binio.hpp"
#include "toploc/rng.hpp"

namespace toploc {

VectorStore read_vectors(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic("TLVEC1");
  const std::uint64_t n = r.u64();
  const std::uint64_t d = r.u64();
  if (d == 0) r.fail("dimensionality must be >= 1");
  if (r.offset() + n * d * sizeof(float) > r.file_size()) {
    r.fail("header declares " + std::to_string(n) + " rows of dimension " +
           std::to_string(d) + " but the payload is shorter");
  }

  std::vector<float> data(n * d);
  const std::uint64_t data_base = r.offset();
  r.f32_array(data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw std::runtime_error("parse error in '" + path + "' at byte offset " +
                               std::to_string(data_base + i * sizeof(float)) +
                               ": non-finite vector component");
    }
  }

  VectorStore store(d, n);
  std::string id;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t len = r.u32();
    id.resize(len);
    if (len > 0) r.bytes(id.data(), len);
    try {
      store.add(id, {data.data() + i * d, d});
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
  }
  r.expect_eof();
  return store;
}

void write_vectors(const VectorStore& store, const std::string& path) {
  detail::BinWriter w(path);
  w.magic("TLVEC1");
  w.u64(store.size());
  w.u64(store.dim());
  w.f32_array(store.raw());
  for (const std::string& id : store.ids()) {
    w.u32(static_cast<std::uint32_t>(id.size()));
    w.bytes(id.data(), id.size());
  }
  w.close();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

[[noreturn]] void line_fail(const std::string& path, std::size_t lineno,
                            const std::string& what) {
  throw std::runtime_error("parse error in '" + path + "' at line " +
                           std::to_string(lineno) + ": " + what);
}

}  // namespace

std::vector<Conversation> read_conversations(const std::string& path,
                                             const VectorStore& query_store) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");

  std::vector<Conversation> convs;
  std::unordered_map<std::string, std::size_t> conv_pos;
  std::unordered_set<std::string> seen_turns;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      line_fail(path, lineno, "expected 3 tab-separated fields, got " +
                                  std::to_string(fields.size()));
    }
    const std::string& conv_id = fields[0];
    const std::string& turn_id = fields[1];
    const std::string& emb_id = fields[2];
    if (conv_id.empty() || turn_id.empty()) line_fail(path, lineno, "empty identifier");

    const auto row = query_store.find(emb_id);
    if (!row) {
      line_fail(path, lineno, "conversation '" + conv_id + "' turn '" + turn_id +
                                  "' references unknown embedding id '" + emb_id + "'");
    }
    const std::string turn_key = conv_id + "\t" + turn_id;
    if (!seen_turns.insert(turn_key).second) {
      line_fail(path, lineno, "duplicate turn id '" + turn_id + "' in conversation '" +
                                  conv_id + "'");
    }
    auto [it, fresh] = conv_pos.emplace(conv_id, convs.size());
    if (fresh) convs.push_back(Conversation{conv_id, {}});
    convs[it->second].turns.push_back({turn_id, *row});
  }
  for (const auto& c : convs) {
    if (c.turns.empty()) throw std::runtime_error("conversation '" + c.id + "' has no turns");
  }
  return convs;
}

void write_conversations(const std::vector<Conversation>& convs,
                         const VectorStore& query_store, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& c : convs) {
    for (const auto& t : c.turns) {
      f << c.id << '\t' << t.id << '\t' << query_store.id_of(t.query_row) << '\n';
    }
  }
  if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

Qrels read_qrels(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");

  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string topic, iteration, doc, grade_str;
    if (!(ss >> topic)) continue;  // blank line
    if (!(ss >> iteration >> doc >> grade_str)) {
      line_fail(path, lineno, "expected 'topic iteration docid grade'");
    }
    std::string trailing;
    if (ss >> trailing) line_fail(path, lineno, "unexpected trailing field '" + trailing + "'");

    int grade = 0;
    try {
      std::size_t used = 0;
      grade = std::stoi(grade_str, &used);
      if (used != grade_str.size()) throw std::invalid_argument(grade_str);
    } catch (const std::exception&) {
      line_fail(path, lineno, "non-integer grade '" + grade_str + "'");
    }
    if (grade < 0) line_fail(path, lineno, "negative grade " + std::to_string(grade));
    if (grade > 2) {
      std::cerr << "warning: " << path << ":" << lineno << ": grade " << grade
                << " outside the usual {0,1,2} scale\n";
    }
    auto& topic_map = qrels.topics[topic];
    auto [it, fresh] = topic_map.emplace(doc, grade);
    if (!fresh) {
      std::cerr << "warning: " << path << ":" << lineno << ": duplicate judgment for ("
                << topic << ", " << doc << "), overriding grade " << it->second << " with "
                << grade << "\n";
      it->second = grade;
    }
  }
  return qrels;
}

void write_qrels(const Qrels& qrels, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& [topic, docs] : qrels.topics) {
    std::vector<std::string> ordered;
    ordered.reserve(docs.size());
    for (const auto& [doc, grade] : docs) ordered.push_back(doc);
    std::sort(ordered.begin(), ordered.end());
    for (const auto& doc : ordered) {
      f << topic << " 0 " << doc << ' ' << docs.at(doc) << '\n';
    }
  }
  if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

void write_run(const RankedRun& run, const std::string& tag, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  char score_buf[32];
  for (const auto& [topic, docs] : run.topics) {
    std::size_t rank = 1;
    for (const auto& [doc, score] : docs) {
      std::snprintf(score_buf, sizeof(score_buf), "%.6f", static_cast<double>(score));
      f << topic << " Q0 " << doc << ' ' << rank << ' ' << score_buf << ' ' << tag << '\n';
      ++rank;
    }
  }
  if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

RankedRun read_run(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");

  RankedRun run;
  std::map<std::string, std::vector<std::tuple<std::size_t, std::string, float>>> staging;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string topic, q0, doc, tag;
    std::size_t rank = 0;
    double score = 0.0;
    if (!(ss >> topic)) continue;
    if (!(ss >> q0 >> doc >> rank >> score >> tag)) {
      line_fail(path, lineno, "expected 'topic Q0 docid rank score tag'");
    }
    const std::string key = topic + "\t" + doc;
    if (!seen.insert(key).second) {
      line_fail(path, lineno, "duplicate document '" + doc + "' for topic '" + topic + "'");
    }
    staging[topic].emplace_back(rank, doc, static_cast<float>(score));
  }
  for (auto& [topic, rows] : staging) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    auto& out = run.topics[topic];
    out.reserve(rows.size());
    for (const auto& [rank, doc, score] : rows) out.emplace_back(doc, score);
  }
  return run;
}

namespace {

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
  return buf;
}

void sample_normalized(std::mt19937_64& gen, std::span<const float> center, double sigma,
                       std::vector<float>& out) {
  double sumsq = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double base = center.empty() ? 0.0 : static_cast<double>(center[t]);
    const double v = base + sigma * gaussian(gen);
    out[t] = static_cast<float>(v);
    sumsq += v * v;
  }
  if (sumsq == 0.0) {
    out[0] = 1.0f;
    sumsq = 1.0;
  }
  const double inv = 1.0 / std::sqrt(sumsq);
  for (auto& v : out) v = static_cast<float>(v * inv);
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.d == 0 || spec.clusters == 0 || spec.conversations == 0 ||
      spec.turns_per_conversation == 0) {
    throw std::invalid_argument("gen_synthetic: all counts must be positive");
  }
  if (spec.clusters > spec.n) {
    throw std::invalid_argument("gen_synthetic: clusters (" + std::to_string(spec.clusters) +
                                ") exceed corpus size (" + std::to_string(spec.n) + ")");
  }
  if (spec.drift < 0.0 || spec.drift > 1.0) {
    throw std::invalid_argument("gen_synthetic: drift must be in [0, 1]");
  }
  if (spec.shift_at != -1 &&
      (spec.shift_at < 1 ||
       spec.shift_at > static_cast<long long>(spec.turns_per_conversation))) {
    throw std::invalid_argument("gen_synthetic: shift_at must be -1 or a turn number in [1, " +
                                std::to_string(spec.turns_per_conversation) + "]");
  }

  std::mt19937_64 gen(spec.seed);
  const std::size_t d = spec.d;

  // Cluster centers drawn once; documents sample around center (i mod clusters).
  std::vector<float> centers(spec.clusters * d);
  for (auto& v : centers) v = static_cast<float>(gaussian(gen));

  const int doc_width = static_cast<int>(std::to_string(spec.n - 1).size());
  const int conv_width = static_cast<int>(std::to_string(spec.conversations).size());

  SyntheticData data{VectorStore(d, spec.n), VectorStore(d, spec.conversations *
                                                                spec.turns_per_conversation),
                     {}, {}};
  std::vector<float> row(d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t c = i % spec.clusters;
    sample_normalized(gen, {centers.data() + c * d, d}, spec.sigma, row);
    data.corpus.add(padded("doc", i, doc_width), row);
  }

  std::vector<float> query(d);
  std::vector<float> prev(d);
  for (std::size_t ci = 0; ci < spec.conversations; ++ci) {
    Conversation conv;
    conv.id = padded("c", ci + 1, conv_width);
    std::size_t cluster = uniform_index(gen, spec.clusters);
    for (std::size_t turn = 1; turn <= spec.turns_per_conversation; ++turn) {
      if (turn == 1) {
        sample_normalized(gen, {centers.data() + cluster * d, d}, spec.sigma, query);
      } else if (spec.shift_at == static_cast<long long>(turn)) {
        std::size_t next = uniform_index(gen, spec.clusters);
        if (next == cluster) next = (next + 1) % spec.clusters;
        cluster = next;
        sample_normalized(gen, {centers.data() + cluster * d, d}, spec.sigma, query);
      } else if (spec.drift > 0.0) {
        prev = query;
        sample_normalized(gen, prev, spec.drift * spec.sigma, query);
      }
      const std::string turn_id = std::to_string(turn);
      const std::string topic = Conversation::topic_of(conv.id, turn_id);
      data.queries.add(topic, query);
      conv.turns.push_back({turn_id, data.queries.size() - 1});
    }
    data.conversations.push_back(std::move(conv));
  }

  // Judgments: each turn's exact top-10 over the corpus, grade 2.
  for (const auto& conv : data.conversations) {
    for (const auto& turn : conv.turns) {
      WorkCounter wc;
      const auto hits = top_k(data.queries.row(turn.query_row), data.corpus, 10, wc);
      auto& judged = data.qrels.topics[Conversation::topic_of(conv.id, turn.id)];
      for (const auto& h : hits) judged.emplace(data.corpus.id_of(h.id), 2);
    }
  }
  return data;
}

}  // namespace toploc
