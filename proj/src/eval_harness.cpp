#include "clarity/eval_harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "clarity/errors.hpp"

namespace clarity::eval {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

void check_labels(std::span<const double> scores, std::span<const uint8_t> labels, const char* what) {
  if (scores.size() != labels.size())
    throw InvalidArgument(std::string(what) + ": scores and labels differ in length");
}

// Queries ordered by descending score, grouped into runs of equal scores.
std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "test";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  throw InvalidArgument("unknown split '" + std::string(name) + "' (train|dev|test)");
}

std::vector<LabeledQuery> load_clariq(const std::filesystem::path& path, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ClariQ file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_tabs(line);
  const auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(path.string() + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_id = column("topic_id");
  const auto c_text = column("initial_request");
  const auto c_level = column("clarification_need");

  std::vector<LabeledQuery> queries;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() < header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " columns");

    const auto& raw = fields[c_level];
    int level = 0;
    const auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), level);
    if (ec != std::errc{} || end != raw.data() + raw.size() || level < 1 || level > 4)
      throw DataError(where + ": clarification_need '" + raw + "' is not a level in 1..4");
    if (fields[c_id].empty()) throw DataError(where + ": empty topic_id");

    const auto [it, fresh] = seen.emplace(fields[c_id], queries.size());
    if (!fresh) {
      const auto& prior = queries[it->second];
      if (prior.clarity_level != level || prior.text != fields[c_text])
        throw DataError(where + ": topic " + fields[c_id] + " repeats with a different request or level");
      continue;
    }
    queries.push_back({fields[c_id], fields[c_text], level, std::nullopt, split});
  }
  return queries;
}

bool binarize_clariq(int level) {
  if (level < 1 || level > 4) throw InvalidArgument("clarity level must be in 1..4, got " + std::to_string(level));
  return level >= 3;
}

AmbigNqLoad load_ambignq(const std::filesystem::path& path, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read AmbigNQ file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw DataError(path.string() + ": expected a JSON array of records");

  AmbigNqLoad out;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& rec = doc[r];
    const auto where = path.string() + " record " + std::to_string(r);
    if (!rec.is_object() || !rec.contains("question") || !rec["question"].is_string())
      throw DataError(where + ": missing question");
    std::string id;
    if (rec.contains("id")) id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    if (id.empty()) throw DataError(where + ": missing id");
    if (!ids.insert(id).second) throw DataError(where + ": duplicate id " + id);

    const auto annotations = rec.find("annotations");
    if (annotations == rec.end() || !annotations->is_array() || annotations->empty()) {
      ++out.skipped;
      continue;
    }
    int bucket = 0;
    for (const auto& a : *annotations) {
      const auto type = a.value("type", "");
      int pairs = 0;
      if (type == "singleAnswer") {
        pairs = 1;
      } else if (type == "multipleQAs") {
        const auto qa = a.find("qaPairs");
        if (qa == a.end() || !qa->is_array()) throw DataError(where + ": multipleQAs annotation without qaPairs");
        pairs = static_cast<int>(qa->size());
      } else {
        throw DataError(where + ": unknown annotation type '" + type + "'");
      }
      bucket = std::max(bucket, pairs);
    }
    if (bucket < 1) throw DataError(where + ": annotation with no question-answer pairs");
    out.queries.push_back({id, rec["question"].get<std::string>(), std::nullopt, bucket, split});
  }
  return out;
}

int bucket_group(int bucket) {
  if (bucket < 1) throw InvalidArgument("bucket must be >= 1");
  return std::min(bucket, 4);
}

RocResult roc_and_auc(std::span<const double> scores, std::span<const uint8_t> labels) {
  check_labels(scores, labels, "roc_and_auc");
  RocResult r;
  for (bool l : labels) (l ? r.n_pos : r.n_neg) += 1;
  if (r.n_pos == 0 || r.n_neg == 0) throw InvalidArgument("roc_and_auc: need both positive and negative labels");

  const auto idx = order_desc(scores);
  const double P = static_cast<double>(r.n_pos);
  const double N = static_cast<double>(r.n_neg);
  std::size_t tp = 0;
  std::size_t fp = 0;
  r.points.push_back({0.0, 0.0});
  double area = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    const std::size_t prev_tp = tp;
    const std::size_t prev_fp = fp;
    for (; i < idx.size() && scores[idx[i]] == s; ++i) (labels[idx[i]] ? tp : fp) += 1;
    // Integer trapezoid: width fp delta, mean height of the two tp counts.
    area += static_cast<double>(fp - prev_fp) * static_cast<double>(tp + prev_tp) / 2.0;
    r.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P});
  }
  r.auc = area / (P * N);
  return r;
}

double auc(std::span<const double> scores, std::span<const uint8_t> labels) {
  return roc_and_auc(scores, labels).auc;
}

double paired_significance(std::span<const double> scores_a, std::span<const double> scores_b,
                           std::span<const uint8_t> labels, const BootstrapOptions& options) {
  check_labels(scores_a, labels, "paired_significance");
  check_labels(scores_b, labels, "paired_significance");
  if (options.resamples == 0) throw InvalidArgument("paired_significance: resamples must be >= 1");
  const double observed = auc(scores_a, labels) - auc(scores_b, labels);
  if (observed == 0.0) return 1.0;

  const std::size_t n = labels.size();
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> a(n);
  std::vector<double> b(n);
  std::vector<uint8_t> l(n);
  std::size_t flips = 0;
  for (std::size_t rep = 0; rep < options.resamples; ++rep) {
    std::size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt > options.max_redraws)
        throw InvalidArgument("paired_significance: could not draw a resample with both classes");
      std::size_t pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = pick(rng);
        a[i] = scores_a[j];
        b[i] = scores_b[j];
        l[i] = labels[j] ? 1 : 0;
        pos += l[i];
      }
      if (pos > 0 && pos < n) break;
    }
    const double diff = auc(a, l) - auc(b, l);
    if ((observed > 0.0 && diff <= 0.0) || (observed < 0.0 && diff >= 0.0)) ++flips;
  }
  const double p = 2.0 * static_cast<double>(flips + 1) / static_cast<double>(options.resamples + 1);
  return std::min(1.0, p);
}

double select_threshold(std::span<const double> scores, std::span<const uint8_t> labels) {
  check_labels(scores, labels, "select_threshold");
  std::size_t n_pos = 0;
  for (bool l : labels) n_pos += l;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("select_threshold: need both classes");

  // Descending sweep: at threshold t = current group's score, predicted positives are
  // exactly the earlier (strictly greater) groups.
  const auto idx = order_desc(scores);
  std::size_t tp = 0;
  std::size_t fp = 0;
  double best_j = -2.0;
  double best_t = scores[idx.front()];
  for (std::size_t i = 0; i < idx.size();) {
    const double t = scores[idx[i]];
    const double j = static_cast<double>(tp) / static_cast<double>(n_pos) -
                     static_cast<double>(fp) / static_cast<double>(n_neg);
    if (j > best_j) {  // strict: an earlier (higher) threshold keeps ties
      best_j = j;
      best_t = t;
    }
    for (; i < idx.size() && scores[idx[i]] == t; ++i) (labels[idx[i]] ? tp : fp) += 1;
  }
  return best_t;
}

std::map<int, double> bucket_report(std::span<const double> scores, std::span<const int> buckets,
                                    double threshold) {
  if (scores.size() != buckets.size()) throw InvalidArgument("bucket_report: scores and buckets differ in length");
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // group -> (ambiguous, total)
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (buckets[i] < 1 || buckets[i] > 4) throw InvalidArgument("bucket_report: buckets must be grouped into 1..4");
    auto& [amb, total] = counts[buckets[i]];
    ++total;
    if (scores[i] > threshold) ++amb;
  }
  std::map<int, double> out;
  for (const auto& [group, c] : counts)
    out[group] = 100.0 * static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

void write_run(const std::filesystem::path& path, const PredictionRun& run) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write run file " + path.string());
    for (const auto& [qid, score] : run.scores) out << qid << '\t' << format_double(score) << '\n';
  }
  nlohmann::json sidecar = {{"method_id", run.method_id}, {"k_used", run.k_used}, {"provenance", run.provenance}};
  std::ofstream meta(path.string() + ".json", std::ios::binary | std::ios::trunc);
  if (!meta) throw DataError("cannot write run sidecar for " + path.string());
  meta << sidecar.dump(2) << '\n';
}

PredictionRun read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read run file " + path.string());
  PredictionRun run;
  run.method_id = path.stem().string();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw DataError(where + ": expected query_id<TAB>score");
    char* end = nullptr;
    const double score = std::strtod(fields[1].c_str(), &end);
    if (fields[1].empty() || *end != '\0' || std::isnan(score)) throw DataError(where + ": bad score '" + fields[1] + "'");
    if (!seen.insert(fields[0]).second) throw DataError(where + ": duplicate query id " + fields[0]);
    run.scores.emplace_back(fields[0], score);
  }
  std::ifstream meta(path.string() + ".json");
  if (meta) {
    try {
      const auto j = nlohmann::json::parse(meta);
      run.method_id = j.value("method_id", run.method_id);
      run.k_used = j.value("k_used", std::size_t{0});
      if (j.contains("provenance")) run.provenance = j["provenance"];
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ".json: " + e.what());
    }
  }
  return run;
}

AlignedScores align_run(const PredictionRun& run, std::span<const LabeledQuery> queries) {
  std::unordered_map<std::string, double> by_id(run.scores.begin(), run.scores.end());
  AlignedScores out;
  std::vector<std::string> missing;
  std::unordered_set<std::string> wanted;
  for (const auto& q : queries) {
    wanted.insert(q.query_id);
    const auto it = by_id.find(q.query_id);
    if (it == by_id.end()) {
      missing.push_back(q.query_id);
      continue;
    }
    out.query_ids.push_back(q.query_id);
    out.scores.push_back(it->second);
  }
  const auto list = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + ids[i];
    if (ids.size() > 20) s += ", ...";
    return s;
  };
  if (!missing.empty())
    throw DataError("run '" + run.method_id + "' is missing " + std::to_string(missing.size()) +
                    " query id(s): " + list(missing));
  std::vector<std::string> extra;
  for (const auto& [qid, _] : run.scores)
    if (!wanted.count(qid)) extra.push_back(qid);
  if (!extra.empty())
    throw DataError("run '" + run.method_id + "' scores " + std::to_string(extra.size()) +
                    " query id(s) outside the evaluated split: " + list(extra));
  return out;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& p : report.roc_points) roc.push_back({p.fpr, p.tpr});
  nlohmann::json j = {
      {"method_id", report.method_id}, {"auc", report.auc}, {"n_pos", report.n_pos},
      {"n_neg", report.n_neg},         {"roc_points", roc}, {"p_values", report.p_values},
  };
  if (report.per_k) {
    nlohmann::json per_k = nlohmann::json::object();
    for (const auto& [k, a] : *report.per_k) per_k[std::to_string(k)] = a;
    j["per_k"] = per_k;
  }
  return j;
}

std::string roc_csv(std::span<const RocPoint> points) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : points) out += format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
  return out;
}

SweepResult sweep_k(std::span<const std::size_t> ks,
                    const std::function<std::vector<double>(std::size_t)>& scores_at_k,
                    std::span<const uint8_t> labels) {
  if (ks.empty()) throw InvalidArgument("sweep_k: no k values");
  SweepResult result;
  for (auto k : ks) {
    if (k == 0) throw InvalidArgument("sweep_k: k must be >= 1");
    const auto scores = scores_at_k(k);
    result.auc_by_k[k] = auc(scores, labels);
  }
  double best = -1.0;
  for (const auto& [k, a] : result.auc_by_k) {  // ascending k, strict > keeps the smaller on ties
    if (a > best) {
      best = a;
      result.selected_k = k;
    }
  }
  return result;
}

}  // namespace clarity::eval
