#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clarity/corpus_store.hpp"

namespace clarity {

/// One line of the pair-scoring wire protocol.
struct PairRequest {
  std::string pair_id;
  std::string text_a;
  std::string text_b;
};

/// Produces p(text_b follows text_a) for ordered text pairs.
/// Implementations return one probability per request, in request order, or throw ScorerError.
class SuccessorScorer {
 public:
  virtual ~SuccessorScorer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> score(std::span<const PairRequest> batch) = 0;
};

/// Jaccard similarity of the two token sets squashed by 1 / (1 + exp(-8 (J - 0.25))).
double heuristic_successor_score(std::string_view text_a, std::string_view text_b);

class HeuristicScorer final : public SuccessorScorer {
 public:
  std::string id() const override { return "heuristic-jaccard-v1"; }
  std::vector<double> score(std::span<const PairRequest> batch) override;
};

/// Serves scores from a file of wire-protocol response lines, looked up by pair_id.
/// Pair ids are content keys (see pair_key), so a file produced offline for one
/// run is reusable by any run that retrieves the same passage texts.
class PairFileScorer final : public SuccessorScorer {
 public:
  explicit PairFileScorer(const std::filesystem::path& path);
  std::string id() const override { return id_; }
  std::vector<double> score(std::span<const PairRequest> batch) override;
  std::size_t size() const noexcept { return scores_.size(); }

 private:
  std::string id_;
  std::unordered_map<std::string, double> scores_;
};

struct ExternalScorerOptions {
  /// Shell command; run via /bin/sh -c.
  std::string command;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  /// Requests per flushed batch; 0 sends everything as one batch.
  std::size_t batch_size = 64;
};

/// Long-lived child process speaking line-delimited JSON on stdin/stdout.
/// Calls are serialized. Any protocol failure kills the child and poisons the session.
class ExternalScorer final : public SuccessorScorer {
 public:
  explicit ExternalScorer(ExternalScorerOptions options);
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  std::string id() const override;
  std::vector<double> score(std::span<const PairRequest> batch) override;

 private:
  std::vector<double> score_one_batch(std::span<const PairRequest> batch);
  void terminate_child();

  ExternalScorerOptions options_;
  std::mutex mutex_;
  int fd_ = -1;
  int pid_ = -1;
  bool poisoned_ = false;
  std::string pending_;  // bytes read past the last complete line
};

/// Opens the scorer named by a spec string:
///   "heuristic" | "pair-file:<path>" | "external:<shell command>"
std::unique_ptr<SuccessorScorer> make_scorer(std::string_view spec,
                                             std::chrono::milliseconds timeout = std::chrono::seconds(120));

/// Content-keyed cache of pair probabilities, one append-only file per scorer id.
/// Thread-safe. With no directory it is purely in-memory.
class PairCache {
 public:
  explicit PairCache(std::optional<std::filesystem::path> dir = std::nullopt);

  std::optional<double> get(const std::string& scorer_id, const std::string& key);
  void put(const std::string& scorer_id, std::span<const std::pair<std::string, double>> records);

  std::filesystem::path file_for(const std::string& scorer_id) const;

 private:
  std::unordered_map<std::string, double>& table(const std::string& scorer_id);

  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::unordered_map<std::string, double>> tables_;
};

/// Pairwise successor probabilities over a query's retrieved passages.
/// probs is row-major n x n; entry (i, j) is p(passage j follows passage i). The
/// diagonal holds NaN.
struct PairScoreSet {
  std::string query_id;
  std::vector<std::string> passages;
  std::vector<double> probs;
  std::string scorer_id;

  std::size_t size() const noexcept { return passages.size(); }
  double at(std::size_t i, std::size_t j) const { return probs[i * passages.size() + j]; }
};

/// Directed adjacency over the same node order as the PairScoreSet it came from.
struct EdgeMatrix {
  std::vector<std::string> passages;
  std::vector<uint8_t> adj;  // row-major n x n, diagonal always 0

  std::size_t size() const noexcept { return passages.size(); }
  bool at(std::size_t i, std::size_t j) const { return adj[i * passages.size() + j] != 0; }
};

struct PairScoringStats {
  std::size_t pairs = 0;        // ordered pairs in the matrix
  std::size_t cache_hits = 0;
  std::size_t scorer_calls = 0;  // invocations of SuccessorScorer::score
  std::size_t scored = 0;        // requests sent to the scorer
};

/// Scores all n(n-1) ordered pairs. Uncached pairs go to the scorer in a single call;
/// the cache is only updated once every pair has a score.
PairScoreSet score_pairs(std::string query_id, std::span<const Passage> passages,
                         SuccessorScorer& scorer, PairCache* cache = nullptr,
                         PairScoringStats* stats = nullptr);

inline constexpr double kDefaultEdgeThreshold = 0.5;

/// adj(i, j) = probs(i, j) > threshold.
EdgeMatrix binarize_edges(const PairScoreSet& scores, double threshold = kDefaultEdgeThreshold);

}  // namespace clarity
