#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace clarity {

struct Passage {
  std::string id;
  std::string text;
};

struct Query {
  std::string id;
  std::string text;
};

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

struct ScoredPassage {
  std::string passage_id;
  double score = 0.0;

  friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

/// Top-k retrieval result, descending by score, ties by passage id ascending.
struct RankedList {
  std::string query_id;
  std::vector<ScoredPassage> entries;
};

struct Posting {
  uint32_t doc = 0;  // internal doc number; doc numbers follow passage id order
  uint32_t tf = 0;
};

/// Floor returned by Index::corpus_score when no query term occurs in the corpus.
inline constexpr double kCorpusScoreFloor = 1e-6;

/// Reads a `<pid>\t<text>` corpus file. Blank lines are skipped.
std::vector<Passage> read_corpus_tsv(const std::filesystem::path& path);
std::vector<Passage> read_corpus_tsv(std::istream& in, const std::string& source_name = "<stream>");

/// Immutable inverted index with an embedded passage store.
///
/// On-disk layout (directory):
///   index.bin   little-endian binary, see save() for the record layout
///   meta.json   tokenizer id, BM25 params, corpus checksum, index checksum
class Index {
 public:
  /// Throws DataError on duplicate ids or blank passages. An empty corpus is rejected too.
  static Index build(std::span<const Passage> corpus, Bm25Params params = {});

  void save(const std::filesystem::path& dir) const;
  static Index load(const std::filesystem::path& dir);

  /// BM25 of `terms` against passage `pid`. Duplicate terms contribute once per occurrence.
  /// Throws InvalidArgument for an unknown pid.
  double bm25_score(std::span<const std::string> terms, std::string_view pid) const;

  /// The k highest-scoring passages with score > 0.
  RankedList retrieve_top_k(const Query& query, std::size_t k) const;
  RankedList retrieve_top_k(std::string query_id, std::span<const std::string> terms,
                            std::size_t k) const;

  /// BM25 of the query against the whole collection treated as one pseudo-document
  /// (tf = collection tf, length = total tokens, df = N/2). Never below kCorpusScoreFloor.
  double corpus_score(std::span<const std::string> terms) const;
  double corpus_score(const Query& query) const;

  std::size_t doc_count() const noexcept { return ids_.size(); }
  uint64_t total_tokens() const noexcept { return total_tokens_; }
  double avg_doc_len() const noexcept { return avg_doc_len_; }
  const Bm25Params& params() const noexcept { return params_; }

  /// Empty span for unknown terms.
  std::span<const Posting> postings(std::string_view term) const;
  uint64_t collection_tf(std::string_view term) const;
  std::size_t term_count() const noexcept { return terms_.size(); }

  bool contains(std::string_view pid) const;
  uint32_t doc_length(std::string_view pid) const;
  const std::string& text(std::string_view pid) const;
  const std::string& passage_id(uint32_t doc) const { return ids_.at(doc); }

  /// Checksum over the canonical (id, text) sequence; independent of input file order.
  const std::string& corpus_checksum() const noexcept { return corpus_checksum_; }
  nlohmann::json metadata() const;

 private:
  struct TermEntry {
    uint64_t collection_tf = 0;
    std::vector<Posting> postings;
  };

  Index() = default;
  void finalize_stats();
  uint32_t doc_number(std::string_view pid) const;
  double idf(std::size_t df) const;
  double tf_weight(uint32_t tf, uint32_t doc_len) const;
  std::string serialize() const;

  Bm25Params params_;
  std::vector<std::string> ids_;
  std::vector<std::string> texts_;
  std::vector<uint32_t> lengths_;
  std::unordered_map<std::string, uint32_t> doc_by_id_;
  std::unordered_map<std::string, TermEntry> terms_;
  uint64_t total_tokens_ = 0;
  double avg_doc_len_ = 0.0;
  std::string corpus_checksum_;
};

}  // namespace clarity
