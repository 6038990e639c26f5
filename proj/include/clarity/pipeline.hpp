#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clarity/coherency_graph.hpp"
#include "clarity/corpus_store.hpp"
#include "clarity/edge_oracle.hpp"
#include "clarity/eval_harness.hpp"
#include "json.hpp"

namespace clarity {

inline constexpr std::string_view kToolVersion = "0.3.0";

enum class Method { nc, anc, wig, nqc, smv, nsigma };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
bool is_graph_method(Method method);

/// Everything a run depends on. Loaded from a JSON file, then overridden by flags.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path index_dir;
  std::filesystem::path dataset;
  std::string dataset_format = "clariq";  // clariq | ambignq
  std::string split = "test";
  std::filesystem::path dev_dataset;      // ClariQ dev file for sweep / threshold selection
  std::string scorer = "heuristic";
  std::size_t k = 20;
  double threshold = kDefaultEdgeThreshold;
  double nsigma_percent = 50.0;
  std::optional<std::filesystem::path> cache_dir;
  uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 1;
  Bm25Params bm25;
  std::chrono::milliseconds scorer_timeout{std::chrono::seconds(120)};
  std::vector<std::size_t> sweep_ks = eval::kDefaultSweepKs;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
};

/// Retrieval results per (index, query text, k), optionally persisted as JSON lines.
class RetrievalCache {
 public:
  RetrievalCache(std::string index_checksum, std::optional<std::filesystem::path> dir);

  std::optional<RankedList> get(const std::string& query_text, std::size_t k);
  void put(const std::string& query_text, std::size_t k, const RankedList& ranked);

 private:
  std::string key(const std::string& query_text, std::size_t k) const;

  std::string index_checksum_;
  std::optional<std::filesystem::path> file_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::vector<ScoredPassage>> entries_;
};

struct PipelineCounters {
  std::atomic<std::size_t> queries{0};
  std::atomic<std::size_t> degenerate{0};
  std::atomic<std::size_t> pair_cache_hits{0};
  std::atomic<std::size_t> scorer_calls{0};
  std::atomic<std::size_t> pairs_scored{0};
  std::atomic<std::size_t> retrieval_cache_hits{0};

  nlohmann::json to_json() const;
};

/// Per-query scoring: retrieve, then either build the coherency network or apply a QPP formula.
class Pipeline {
 public:
  /// `scorer` may be null when only QPP methods will be run.
  Pipeline(RunConfig config, std::shared_ptr<const Index> index, std::shared_ptr<SuccessorScorer> scorer);

  RankedList retrieve(const Query& query, std::size_t k);

  /// Network over the top-k passages. Throws InvalidArgument if fewer than 2 were retrieved.
  CoherencyNetwork network(const Query& query, std::size_t k);

  /// Raw method value (connectivity or QPP), or nullopt when retrieval is too thin to score.
  std::optional<double> raw_score(const Query& query, Method method, std::size_t k);

  /// Run-file score: higher means more ambiguous. Unscoreable queries get +infinity.
  double ambiguity_score(const Query& query, Method method, std::size_t k);

  /// Scores all queries, fanning out over `config.workers` threads; output order follows `queries`.
  eval::PredictionRun predict(std::span<const eval::LabeledQuery> queries, Method method, std::size_t k);

  const RunConfig& config() const noexcept { return config_; }
  const Index& index() const noexcept { return *index_; }
  const PipelineCounters& counters() const noexcept { return counters_; }
  std::string scorer_id() const { return scorer_ ? scorer_->id() : std::string("none"); }

 private:
  CoherencyNetwork network_from(const Query& query, const RankedList& ranked);

  RunConfig config_;
  std::shared_ptr<const Index> index_;
  std::shared_ptr<SuccessorScorer> scorer_;
  PairCache pair_cache_;
  RetrievalCache retrieval_cache_;
  PipelineCounters counters_;
};

/// Queries of a dataset file according to `format` (clariq | ambignq).
std::vector<eval::LabeledQuery> load_dataset(const std::filesystem::path& path, std::string_view format,
                                             eval::Split split);

/// 1 for ClariQ levels 3-4, 0 for levels 1-2. Throws DataError for unlabeled queries.
std::vector<uint8_t> clarity_labels(std::span<const eval::LabeledQuery> queries);

}  // namespace clarity
