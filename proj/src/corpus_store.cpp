#include "clarity/corpus_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "clarity/errors.hpp"
#include "clarity/hashing.hpp"
#include "clarity/tokenizer.hpp"

namespace clarity {
namespace {

constexpr std::string_view kIndexMagic = "CLRIDX01";
constexpr const char* kIndexFile = "index.bin";
constexpr const char* kMetaFile = "meta.json";

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

class Writer {
 public:
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw DataError("index.bin: truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::vector<Passage> read_corpus_tsv(std::istream& in, const std::string& source_name) {
  std::vector<Passage> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(source_name + ":" + std::to_string(line_no) + ": expected <pid>\\t<text>");
    corpus.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return corpus;
}

std::vector<Passage> read_corpus_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus " + path.string());
  return read_corpus_tsv(in, path.string());
}

Index Index::build(std::span<const Passage> corpus, Bm25Params params) {
  if (corpus.empty()) throw DataError("empty corpus");

  std::vector<const Passage*> order;
  order.reserve(corpus.size());
  for (const auto& p : corpus) {
    if (p.id.empty()) throw DataError("passage with empty id");
    if (is_blank(p.text)) throw DataError("passage " + p.id + " has empty text");
    order.push_back(&p);
  }
  std::sort(order.begin(), order.end(), [](const Passage* a, const Passage* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i]->id == order[i - 1]->id) throw DataError("duplicate passage id: " + order[i]->id);

  Index index;
  index.params_ = params;
  index.ids_.reserve(order.size());
  index.texts_.reserve(order.size());
  index.lengths_.reserve(order.size());

  std::string canonical;
  for (uint32_t doc = 0; doc < order.size(); ++doc) {
    const Passage& p = *order[doc];
    const auto tokens = tokenize(p.text);
    std::unordered_map<std::string, uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) {
      auto& entry = index.terms_[term];
      entry.collection_tf += count;
      entry.postings.push_back({doc, count});  // docs are visited in id order
    }
    index.ids_.push_back(p.id);
    index.texts_.push_back(p.text);
    index.lengths_.push_back(static_cast<uint32_t>(tokens.size()));
    canonical.append(p.id).append("\t").append(p.text).append("\n");
  }
  index.corpus_checksum_ = sha256_hex(canonical);
  index.finalize_stats();
  return index;
}

void Index::finalize_stats() {
  doc_by_id_.clear();
  for (uint32_t doc = 0; doc < ids_.size(); ++doc) doc_by_id_.emplace(ids_[doc], doc);
  total_tokens_ = std::accumulate(lengths_.begin(), lengths_.end(), uint64_t{0});
  avg_doc_len_ = static_cast<double>(total_tokens_) / static_cast<double>(ids_.size());
}

// index.bin record layout (all integers little-endian):
//   magic "CLRIDX01"
//   u64 doc_count, then per doc in id order: str id, str text, u32 token_count
//   u64 term_count, then per term in byte order: str term, u64 collection_tf,
//       u32 posting_count, posting_count x (u32 doc, u32 tf)
// where str = u32 byte length followed by the bytes.
std::string Index::serialize() const {
  Writer w;
  w.raw(kIndexMagic);
  w.u64(ids_.size());
  for (std::size_t doc = 0; doc < ids_.size(); ++doc) {
    w.str(ids_[doc]);
    w.str(texts_[doc]);
    w.u32(lengths_[doc]);
  }
  std::vector<const std::string*> sorted_terms;
  sorted_terms.reserve(terms_.size());
  for (const auto& [term, _] : terms_) sorted_terms.push_back(&term);
  std::sort(sorted_terms.begin(), sorted_terms.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  w.u64(sorted_terms.size());
  for (const auto* term : sorted_terms) {
    const auto& entry = terms_.at(*term);
    w.str(*term);
    w.u64(entry.collection_tf);
    w.u32(static_cast<uint32_t>(entry.postings.size()));
    for (const auto& p : entry.postings) {
      w.u32(p.doc);
      w.u32(p.tf);
    }
  }
  return w.take();
}

nlohmann::json Index::metadata() const {
  return {
      {"format", std::string(kIndexMagic)},
      {"tokenizer", std::string(kTokenizerId)},
      {"bm25", {{"k1", params_.k1}, {"b", params_.b}}},
      {"doc_count", ids_.size()},
      {"total_tokens", total_tokens_},
      {"term_count", terms_.size()},
      {"corpus_sha256", corpus_checksum_},
  };
}

void Index::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto bytes = serialize();
  write_file(dir / kIndexFile, bytes);
  auto meta = metadata();
  meta["index_sha256"] = sha256_hex(bytes);
  write_file(dir / kMetaFile, meta.dump(2) + "\n");
}

Index Index::load(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / kMetaFile));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("index metadata " + (dir / kMetaFile).string() + ": " + e.what());
  }
  if (meta.value("tokenizer", "") != kTokenizerId)
    throw DataError("index built with tokenizer '" + meta.value("tokenizer", "") + "', expected '" +
                    std::string(kTokenizerId) + "'");

  const auto bytes = read_file(dir / kIndexFile);
  if (meta.contains("index_sha256") && meta["index_sha256"] != sha256_hex(bytes))
    throw DataError("index.bin checksum does not match meta.json");

  Index index;
  index.params_.k1 = meta.at("bm25").at("k1").get<double>();
  index.params_.b = meta.at("bm25").at("b").get<double>();
  index.corpus_checksum_ = meta.at("corpus_sha256").get<std::string>();

  Reader r(bytes);
  if (r.raw(kIndexMagic.size()) != kIndexMagic) throw DataError("index.bin: bad magic");
  const auto n_docs = r.u64();
  if (n_docs == 0) throw DataError("index.bin: no documents");
  for (uint64_t doc = 0; doc < n_docs; ++doc) {
    index.ids_.push_back(r.str());
    index.texts_.push_back(r.str());
    index.lengths_.push_back(r.u32());
  }
  const auto n_terms = r.u64();
  for (uint64_t t = 0; t < n_terms; ++t) {
    auto term = r.str();
    TermEntry entry;
    entry.collection_tf = r.u64();
    const auto n_postings = r.u32();
    entry.postings.reserve(n_postings);
    for (uint32_t i = 0; i < n_postings; ++i) {
      const auto doc = r.u32();
      const auto tf = r.u32();
      if (doc >= n_docs) throw DataError("index.bin: posting references unknown doc");
      entry.postings.push_back({doc, tf});
    }
    index.terms_.emplace(std::move(term), std::move(entry));
  }
  if (!r.done()) throw DataError("index.bin: trailing bytes");
  index.finalize_stats();
  return index;
}

double Index::idf(std::size_t df) const {
  const auto n = static_cast<double>(ids_.size());
  const auto d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Index::tf_weight(uint32_t tf, uint32_t doc_len) const {
  const double f = tf;
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_doc_len_;
  return f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

uint32_t Index::doc_number(std::string_view pid) const {
  const auto it = doc_by_id_.find(std::string(pid));
  if (it == doc_by_id_.end()) throw InvalidArgument("unknown passage id: " + std::string(pid));
  return it->second;
}

bool Index::contains(std::string_view pid) const { return doc_by_id_.count(std::string(pid)) != 0; }

uint32_t Index::doc_length(std::string_view pid) const { return lengths_[doc_number(pid)]; }

const std::string& Index::text(std::string_view pid) const { return texts_[doc_number(pid)]; }

std::span<const Posting> Index::postings(std::string_view term) const {
  const auto it = terms_.find(std::string(term));
  if (it == terms_.end()) return {};
  return it->second.postings;
}

uint64_t Index::collection_tf(std::string_view term) const {
  const auto it = terms_.find(std::string(term));
  return it == terms_.end() ? 0 : it->second.collection_tf;
}

double Index::bm25_score(std::span<const std::string> terms, std::string_view pid) const {
  const auto doc = doc_number(pid);
  double score = 0.0;
  for (const auto& term : terms) {
    const auto list = postings(term);
    const auto it = std::lower_bound(list.begin(), list.end(), doc,
                                     [](const Posting& p, uint32_t d) { return p.doc < d; });
    if (it == list.end() || it->doc != doc) continue;
    score += idf(list.size()) * tf_weight(it->tf, lengths_[doc]);
  }
  return score;
}

RankedList Index::retrieve_top_k(std::string query_id, std::span<const std::string> terms,
                                 std::size_t k) const {
  RankedList ranked{std::move(query_id), {}};
  if (k == 0) throw InvalidArgument("retrieve_top_k: k must be >= 1");

  // Accumulate in query-term order so results are bitwise equal to bm25_score().
  std::unordered_map<uint32_t, double> acc;
  for (const auto& term : terms) {
    const auto list = postings(term);
    if (list.empty()) continue;
    const double w = idf(list.size());
    for (const auto& p : list) acc[p.doc] += w * tf_weight(p.tf, lengths_[p.doc]);
  }

  std::vector<std::pair<uint32_t, double>> candidates;
  candidates.reserve(acc.size());
  for (const auto& [doc, score] : acc)
    if (score > 0.0) candidates.emplace_back(doc, score);

  const auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;  // doc numbers follow passage id order
  };
  const auto take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), better);
  ranked.entries.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    ranked.entries.push_back({ids_[candidates[i].first], candidates[i].second});
  return ranked;
}

RankedList Index::retrieve_top_k(const Query& query, std::size_t k) const {
  const auto terms = tokenize(query.text);
  return retrieve_top_k(query.id, terms, k);
}

double Index::corpus_score(std::span<const std::string> terms) const {
  const double pseudo_df = static_cast<double>(ids_.size()) / 2.0;
  const double n = static_cast<double>(ids_.size());
  const double pseudo_idf = std::log(1.0 + (n - pseudo_df + 0.5) / (pseudo_df + 0.5));
  const double norm =
      1.0 - params_.b + params_.b * static_cast<double>(total_tokens_) / avg_doc_len_;
  double score = 0.0;
  for (const auto& term : terms) {
    const auto ctf = static_cast<double>(collection_tf(term));
    if (ctf == 0.0) continue;
    score += pseudo_idf * ctf * (params_.k1 + 1.0) / (ctf + params_.k1 * norm);
  }
  return score > 0.0 ? score : kCorpusScoreFloor;
}

double Index::corpus_score(const Query& query) const { return corpus_score(tokenize(query.text)); }

}  // namespace clarity
