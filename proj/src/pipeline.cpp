#include "clarity/pipeline.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "clarity/errors.hpp"
#include "clarity/hashing.hpp"
#include "clarity/qpp.hpp"
#include "clarity/tokenizer.hpp"

namespace clarity {

Method parse_method(std::string_view name) {
  if (name == "nc") return Method::nc;
  if (name == "anc") return Method::anc;
  if (name == "wig") return Method::wig;
  if (name == "nqc") return Method::nqc;
  if (name == "smv") return Method::smv;
  if (name == "nsigma") return Method::nsigma;
  throw InvalidArgument("unknown method '" + std::string(name) + "' (nc|anc|wig|nqc|smv|nsigma)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::nc: return "nc";
    case Method::anc: return "anc";
    case Method::wig: return "wig";
    case Method::nqc: return "nqc";
    case Method::smv: return "smv";
    case Method::nsigma: return "nsigma";
  }
  return "?";
}

bool is_graph_method(Method method) { return method == Method::nc || method == Method::anc; }

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  const auto path_of = [&](const char* key, std::filesystem::path& dst) {
    if (j.contains(key)) dst = j[key].get<std::string>();
  };
  try {
    path_of("corpus", c.corpus);
    path_of("index", c.index_dir);
    path_of("dataset", c.dataset);
    path_of("dev_dataset", c.dev_dataset);
    path_of("out", c.out_dir);
    c.dataset_format = j.value("dataset_format", c.dataset_format);
    c.split = j.value("split", c.split);
    c.scorer = j.value("scorer", c.scorer);
    c.k = j.value("k", c.k);
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    if (j.contains("cache_dir") && !j["cache_dir"].is_null()) c.cache_dir = j["cache_dir"].get<std::string>();
    if (j.contains("qpp")) c.nsigma_percent = j["qpp"].value("nsigma_percent", c.nsigma_percent);
    if (j.contains("bm25")) {
      c.bm25.k1 = j["bm25"].value("k1", c.bm25.k1);
      c.bm25.b = j["bm25"].value("b", c.bm25.b);
    }
    if (j.contains("scorer_timeout_ms")) c.scorer_timeout = std::chrono::milliseconds(j["scorer_timeout_ms"].get<long long>());
    if (j.contains("sweep_ks")) c.sweep_ks = j["sweep_ks"].get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"corpus", corpus.string()},
      {"index", index_dir.string()},
      {"dataset", dataset.string()},
      {"dataset_format", dataset_format},
      {"split", split},
      {"dev_dataset", dev_dataset.string()},
      {"scorer", scorer},
      {"k", k},
      {"threshold", threshold},
      {"qpp", {{"nsigma_percent", nsigma_percent}}},
      {"cache_dir", cache_dir ? nlohmann::json(cache_dir->string()) : nlohmann::json(nullptr)},
      {"seed", seed},
      {"out", out_dir.string()},
      {"workers", workers},
      {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
      {"scorer_timeout_ms", scorer_timeout.count()},
      {"sweep_ks", sweep_ks},
  };
}

void RunConfig::validate() const {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0,1]");
  if (!(nsigma_percent > 0.0 && nsigma_percent <= 100.0)) throw InvalidArgument("nsigma_percent must lie in (0,100]");
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (!(bm25.k1 >= 0.0) || !(bm25.b >= 0.0 && bm25.b <= 1.0)) throw InvalidArgument("bad BM25 parameters");
  if (dataset_format != "clariq" && dataset_format != "ambignq")
    throw InvalidArgument("dataset_format must be clariq or ambignq");
  for (auto sk : sweep_ks)
    if (sk < 1) throw InvalidArgument("sweep k values must be >= 1");
  eval::parse_split(split);
}

RetrievalCache::RetrievalCache(std::string index_checksum, std::optional<std::filesystem::path> dir)
    : index_checksum_(std::move(index_checksum)) {
  if (!dir) return;
  std::filesystem::create_directories(*dir);
  file_ = *dir / ("retrieval-" + index_checksum_.substr(0, 16) + ".jsonl");
  std::ifstream in(*file_);
  std::string line;
  while (std::getline(in, line)) {
    try {
      const auto j = nlohmann::json::parse(line);
      std::vector<ScoredPassage> list;
      for (const auto& e : j.at("entries")) list.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
      entries_[j.at("key").get<std::string>()] = std::move(list);
    } catch (const nlohmann::json::exception&) {
      // torn or foreign line; the entry is recomputed on demand
    }
  }
}

std::string RetrievalCache::key(const std::string& query_text, std::size_t k) const {
  return sha256_hex(query_text).substr(0, 32) + ":" + std::to_string(k);
}

std::optional<RankedList> RetrievalCache::get(const std::string& query_text, std::size_t k) {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key(query_text, k));
  if (it == entries_.end()) return std::nullopt;
  return RankedList{{}, it->second};
}

void RetrievalCache::put(const std::string& query_text, std::size_t k, const RankedList& ranked) {
  std::lock_guard lock(mutex_);
  const auto kk = key(query_text, k);
  if (!entries_.emplace(kk, ranked.entries).second || !file_) return;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ranked.entries) entries.push_back({e.passage_id, e.score});
  std::ofstream out(*file_, std::ios::app | std::ios::binary);
  out << nlohmann::json{{"key", kk}, {"entries", entries}}.dump() << '\n';
}

nlohmann::json PipelineCounters::to_json() const {
  return {
      {"queries", queries.load()},
      {"degenerate", degenerate.load()},
      {"pair_cache_hits", pair_cache_hits.load()},
      {"scorer_calls", scorer_calls.load()},
      {"pairs_scored", pairs_scored.load()},
      {"retrieval_cache_hits", retrieval_cache_hits.load()},
  };
}

namespace {

// Retrieval results depend on the passages and on how they were indexed.
std::string retrieval_fingerprint(const Index& index) {
  return sha256_hex(index.corpus_checksum() + "|" + eval::format_double(index.params().k1) + "|" +
                    eval::format_double(index.params().b) + "|" + std::string(kTokenizerId));
}

}  // namespace

Pipeline::Pipeline(RunConfig config, std::shared_ptr<const Index> index, std::shared_ptr<SuccessorScorer> scorer)
    : config_(std::move(config)),
      index_(std::move(index)),
      scorer_(std::move(scorer)),
      pair_cache_(config_.cache_dir),
      retrieval_cache_(retrieval_fingerprint(*index_), config_.cache_dir) {
  config_.validate();
}

RankedList Pipeline::retrieve(const Query& query, std::size_t k) {
  if (auto hit = retrieval_cache_.get(query.text, k)) {
    ++counters_.retrieval_cache_hits;
    hit->query_id = query.id;
    return *hit;
  }
  auto ranked = index_->retrieve_top_k(query, k);
  retrieval_cache_.put(query.text, k, ranked);
  return ranked;
}

CoherencyNetwork Pipeline::network(const Query& query, std::size_t k) {
  return network_from(query, retrieve(query, k));
}

CoherencyNetwork Pipeline::network_from(const Query& query, const RankedList& ranked) {
  if (!scorer_) throw InvalidArgument("graph methods need a successor scorer");
  if (ranked.entries.size() < 2)
    throw InvalidArgument("query " + query.id + " retrieved " + std::to_string(ranked.entries.size()) +
                          " passage(s); a coherency network needs at least 2");
  std::vector<Passage> passages;
  passages.reserve(ranked.entries.size());
  for (const auto& e : ranked.entries) passages.push_back({e.passage_id, index_->text(e.passage_id)});
  PairScoringStats stats;
  const auto scores = score_pairs(query.id, passages, *scorer_, &pair_cache_, &stats);
  counters_.pair_cache_hits += stats.cache_hits;
  counters_.scorer_calls += stats.scorer_calls;
  counters_.pairs_scored += stats.scored;
  return build_network(binarize_edges(scores, config_.threshold));
}

std::optional<double> Pipeline::raw_score(const Query& query, Method method, std::size_t k) {
  if (is_graph_method(method)) {
    const auto ranked = retrieve(query, k);
    if (ranked.entries.size() < 2) return std::nullopt;
    const auto g = network_from(query, ranked);
    return method == Method::nc ? static_cast<double>(node_connectivity(g)) : average_node_connectivity(g);
  }
  const auto ranked = retrieve(query, k);
  if (ranked.entries.empty()) return std::nullopt;
  const auto terms = tokenize(query.text);
  const auto scores = qpp::scores_of(ranked);
  const qpp::QppInput input{scores, index_->corpus_score(terms), std::max<std::size_t>(terms.size(), 1)};
  switch (method) {
    case Method::wig: return qpp::wig(input);
    case Method::nqc: return qpp::nqc(input);
    case Method::smv: return qpp::smv(input);
    case Method::nsigma: return qpp::n_sigma_percent(input, config_.nsigma_percent);
    default: break;
  }
  throw InvalidArgument("unhandled method");
}

double Pipeline::ambiguity_score(const Query& query, Method method, std::size_t k) {
  ++counters_.queries;
  const auto raw = raw_score(query, method, k);
  if (!raw) {
    ++counters_.degenerate;
    return std::numeric_limits<double>::infinity();
  }
  // High connectivity and high predicted performance both indicate a clear query.
  return -*raw;
}

eval::PredictionRun Pipeline::predict(std::span<const eval::LabeledQuery> queries, Method method, std::size_t k) {
  if (is_graph_method(method) && !scorer_) throw InvalidArgument("method " + std::string(to_string(method)) + " needs a scorer");
  std::vector<double> scores(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());
  std::atomic<std::size_t> next{0};

  const auto work = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      try {
        scores[i] = ambiguity_score({queries[i].query_id, queries[i].text}, method, k);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min(config_.workers, std::max<std::size_t>(queries.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);  // first failing query in dataset order

  eval::PredictionRun run;
  run.method_id = std::string(to_string(method));
  run.k_used = k;
  nlohmann::json degenerate = nlohmann::json::array();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    run.scores.emplace_back(queries[i].query_id, scores[i]);
    if (std::isinf(scores[i])) degenerate.push_back(queries[i].query_id);
  }
  if (!degenerate.empty())
    std::cerr << "warning: " << degenerate.size() << (degenerate.size() == 1 ? " query was" : " queries were")
              << " scored as maximally ambiguous because retrieval returned too few passages\n";

  // Operational settings such as paths or worker count do not influence scores and stay out.
  run.provenance = {
      {"tool_version", std::string(kToolVersion)},
      {"method", run.method_id},
      {"k", k},
      {"direction", "higher = more ambiguous"},
      {"scorer", is_graph_method(method) ? scorer_id() : std::string("none")},
      {"edge_threshold", config_.threshold},
      {"nsigma_percent", config_.nsigma_percent},
      {"bm25", {{"k1", index_->params().k1}, {"b", index_->params().b}}},
      {"tokenizer", std::string(kTokenizerId)},
      {"corpus_sha256", index_->corpus_checksum()},
      {"seed", config_.seed},
      {"degenerate_queries", degenerate},
  };
  return run;
}

std::vector<eval::LabeledQuery> load_dataset(const std::filesystem::path& path, std::string_view format,
                                             eval::Split split) {
  if (format == "clariq") return eval::load_clariq(path, split);
  if (format == "ambignq") {
    auto loaded = eval::load_ambignq(path, split);
    if (loaded.skipped > 0)
      std::cerr << "warning: skipped " << loaded.skipped << " AmbigNQ record(s) without annotations\n";
    return std::move(loaded.queries);
  }
  throw InvalidArgument("unknown dataset format '" + std::string(format) + "'");
}

std::vector<uint8_t> clarity_labels(std::span<const eval::LabeledQuery> queries) {
  std::vector<uint8_t> labels;
  labels.reserve(queries.size());
  for (const auto& q : queries) {
    if (!q.clarity_level) throw DataError("query " + q.query_id + " has no clarity level");
    labels.push_back(eval::binarize_clariq(*q.clarity_level) ? 1 : 0);
  }
  return labels;
}

}  // namespace clarity
