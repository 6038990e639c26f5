#include "clarity/edge_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "clarity/errors.hpp"
#include "clarity/hashing.hpp"
#include "clarity/tokenizer.hpp"
#include "wire_protocol.hpp"

namespace clarity {

double heuristic_successor_score(std::string_view text_a, std::string_view text_b) {
  const auto ta = tokenize(text_a);
  const auto tb = tokenize(text_b);
  const std::set<std::string> a(ta.begin(), ta.end());
  const std::set<std::string> b(tb.begin(), tb.end());
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  const std::size_t unioned = a.size() + b.size() - common;
  const double jaccard = unioned == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(unioned);
  return 1.0 / (1.0 + std::exp(-8.0 * (jaccard - 0.25)));
}

std::vector<double> HeuristicScorer::score(std::span<const PairRequest> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& r : batch) out.push_back(heuristic_successor_score(r.text_a, r.text_b));
  return out;
}

PairFileScorer::PairFileScorer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read pair file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto r = wire::decode_response(line);
      scores_[r.pair_id] = r.p_isnext;
    } catch (const std::runtime_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  id_ = "pair-file-" + sha256_file(path).substr(0, 16);
}

std::vector<double> PairFileScorer::score(std::span<const PairRequest> batch) {
  std::vector<double> out;
  std::vector<std::string> missing;
  out.reserve(batch.size());
  for (const auto& r : batch) {
    const auto it = scores_.find(r.pair_id);
    if (it == scores_.end()) {
      missing.push_back(r.pair_id);
      continue;
    }
    out.push_back(it->second);
  }
  if (!missing.empty())
    throw ScorerError("pair file has no score for " + std::to_string(missing.size()) + " pair(s)",
                      std::move(missing));
  return out;
}

std::unique_ptr<SuccessorScorer> make_scorer(std::string_view spec, std::chrono::milliseconds timeout) {
  constexpr std::string_view kPairFile = "pair-file:";
  constexpr std::string_view kExternal = "external:";
  if (spec == "heuristic") return std::make_unique<HeuristicScorer>();
  if (spec.starts_with(kPairFile))
    return std::make_unique<PairFileScorer>(std::filesystem::path(spec.substr(kPairFile.size())));
  if (spec.starts_with(kExternal)) {
    ExternalScorerOptions options;
    options.command = std::string(spec.substr(kExternal.size()));
    options.timeout = timeout;
    return std::make_unique<ExternalScorer>(std::move(options));
  }
  throw InvalidArgument("unknown scorer spec '" + std::string(spec) +
                        "' (expected heuristic, pair-file:<path> or external:<command>)");
}

PairCache::PairCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path PairCache::file_for(const std::string& scorer_id) const {
  std::string name;
  for (char c : scorer_id)
    name.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  if (name.size() > 64 || name != scorer_id) name = name.substr(0, 40) + "-" + sha256_hex(scorer_id).substr(0, 16);
  return (dir_ ? *dir_ : std::filesystem::path{}) / (name + ".pairs");
}

std::unordered_map<std::string, double>& PairCache::table(const std::string& scorer_id) {
  auto [it, inserted] = tables_.try_emplace(scorer_id);
  if (inserted && dir_) {
    std::ifstream in(file_for(scorer_id));
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;  // torn trailing record
      char* end = nullptr;
      const double p = std::strtod(line.c_str() + tab + 1, &end);
      if (end == line.c_str() + tab + 1) continue;
      it->second[line.substr(0, tab)] = p;
    }
  }
  return it->second;
}

std::optional<double> PairCache::get(const std::string& scorer_id, const std::string& key) {
  std::lock_guard lock(mutex_);
  const auto& t = table(scorer_id);
  const auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

void PairCache::put(const std::string& scorer_id,
                    std::span<const std::pair<std::string, double>> records) {
  std::lock_guard lock(mutex_);
  auto& t = table(scorer_id);
  std::string appended;
  for (const auto& [key, p] : records) {
    if (!t.emplace(key, p).second) continue;
    char buf[64];
    std::snprintf(buf, sizeof buf, "\t%.17g\n", p);
    appended.append(key).append(buf);
  }
  if (dir_ && !appended.empty()) {
    std::ofstream out(file_for(scorer_id), std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to pair cache " + file_for(scorer_id).string());
    out << appended;
  }
}

PairScoreSet score_pairs(std::string query_id, std::span<const Passage> passages,
                         SuccessorScorer& scorer, PairCache* cache, PairScoringStats* stats) {
  const std::size_t n = passages.size();
  if (n < 2) throw InvalidArgument("score_pairs: need at least 2 passages, got " + std::to_string(n));

  PairScoreSet result;
  result.query_id = std::move(query_id);
  result.scorer_id = scorer.id();
  result.probs.assign(n * n, std::numeric_limits<double>::quiet_NaN());
  for (const auto& p : passages) result.passages.push_back(p.id);

  PairScoringStats local;
  local.pairs = n * (n - 1);

  // Cells waiting on each distinct key; identical texts share one request.
  std::unordered_map<std::string, std::vector<std::size_t>> waiting;
  std::vector<PairRequest> requests;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto key = pair_key(passages[i].text, passages[j].text);
      if (cache) {
        if (auto hit = cache->get(result.scorer_id, key)) {
          result.probs[i * n + j] = *hit;
          ++local.cache_hits;
          continue;
        }
      }
      auto [it, fresh] = waiting.try_emplace(key);
      it->second.push_back(i * n + j);
      if (fresh) requests.push_back({std::move(key), passages[i].text, passages[j].text});
    }
  }

  if (!requests.empty()) {
    ++local.scorer_calls;
    local.scored = requests.size();
    std::vector<double> scores;
    try {
      scores = scorer.score(requests);
    } catch (const ScorerError& e) {
      std::vector<std::string> ids = e.pair_ids();
      if (ids.empty())
        for (const auto& r : requests) ids.push_back(r.pair_id);
      throw ScorerError("query " + result.query_id + ": " + e.what(), std::move(ids));
    }
    if (scores.size() != requests.size())
      throw ScorerError("query " + result.query_id + ": scorer returned " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(requests.size()) + " pairs");
    std::vector<std::pair<std::string, double>> records;
    records.reserve(requests.size());
    for (std::size_t r = 0; r < requests.size(); ++r) {
      const double p = scores[r];
      if (!(p >= 0.0 && p <= 1.0))
        throw ScorerError("query " + result.query_id + ": probability outside [0,1]", {requests[r].pair_id});
      for (auto cell : waiting.at(requests[r].pair_id)) result.probs[cell] = p;
      records.emplace_back(requests[r].pair_id, p);
    }
    if (cache) cache->put(result.scorer_id, records);
  }

  if (stats) *stats = local;
  return result;
}

EdgeMatrix binarize_edges(const PairScoreSet& scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw InvalidArgument("edge threshold must lie in [0,1]");
  const std::size_t n = scores.size();
  EdgeMatrix m{scores.passages, std::vector<uint8_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && scores.at(i, j) > threshold) m.adj[i * n + j] = 1;
  return m;
}

}  // namespace clarity
