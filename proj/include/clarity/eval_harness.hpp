#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace clarity::eval {

enum class Split { train, dev, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// A dataset query. ClariQ rows carry clarity_level, AmbigNQ records carry bucket.
struct LabeledQuery {
  std::string query_id;
  std::string text;
  std::optional<int> clarity_level;
  std::optional<int> bucket;
  Split split = Split::test;
};

/// ClariQ TSV with a header containing topic_id, initial_request and clarification_need.
/// Repeated rows for one topic (the public files have one row per facet question)
/// collapse into a single query; they must agree on request text and level.
std::vector<LabeledQuery> load_clariq(const std::filesystem::path& path, Split split = Split::test);

/// Levels 1-2 are clear, 3-4 need clarification. Throws InvalidArgument outside 1..4.
bool binarize_clariq(int level);

struct AmbigNqLoad {
  std::vector<LabeledQuery> queries;
  std::size_t skipped = 0;  // records without annotations
};

/// AmbigNQ JSON array of {id, question, annotations}. A singleAnswer annotation counts
/// one QA pair, a multipleQAs annotation counts its qaPairs; the bucket is the maximum.
AmbigNqLoad load_ambignq(const std::filesystem::path& path, Split split = Split::dev);

/// Reporting group for an AmbigNQ bucket: 1, 2, 3 or 4 (meaning 4+).
int bucket_group(int bucket);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;
  double auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

// Label spans hold 1 for the positive class (needs clarification) and 0 otherwise.

/// ROC over unique score thresholds, descending; AUC by the trapezoidal rule.
/// Higher scores predict the positive class. Throws InvalidArgument when a class is missing.
RocResult roc_and_auc(std::span<const double> scores, std::span<const uint8_t> labels);

/// AUC alone, same convention as roc_and_auc.
double auc(std::span<const double> scores, std::span<const uint8_t> labels);

struct BootstrapOptions {
  std::size_t resamples = 10000;
  uint64_t seed = 0;
  std::size_t max_redraws = 1000;  // per resample, for single-class draws
};

/// Paired bootstrap over queries for AUC(a) - AUC(b). Returns the two-sided p-value
/// min(1, 2 (flips + 1) / (R + 1)), where flips counts resampled differences that do not
/// share the sign of the observed difference. Identical AUCs give 1.
double paired_significance(std::span<const double> scores_a, std::span<const double> scores_b,
                           std::span<const uint8_t> labels, const BootstrapOptions& options = {});

/// Threshold t maximizing TPR - FPR for the rule score > t, over the unique scores.
/// Ties go to the higher threshold.
double select_threshold(std::span<const double> scores, std::span<const uint8_t> labels);

/// Percentage of queries with score > threshold, per bucket group. Empty groups are absent.
std::map<int, double> bucket_report(std::span<const double> scores, std::span<const int> buckets,
                                    double threshold);

/// Per-query scores from one method; higher means more ambiguous.
struct PredictionRun {
  std::string method_id;
  std::vector<std::pair<std::string, double>> scores;  // file order
  std::size_t k_used = 0;
  nlohmann::json provenance = nlohmann::json::object();
};

/// `<path>` gets `query_id\tscore` lines; `<path>.json` holds the run metadata.
void write_run(const std::filesystem::path& path, const PredictionRun& run);
PredictionRun read_run(const std::filesystem::path& path);

/// Scores and labels of `run` aligned to `queries` order. Throws DataError listing
/// queries the run does not score, or run entries outside the query set.
struct AlignedScores {
  std::vector<std::string> query_ids;
  std::vector<double> scores;
};
AlignedScores align_run(const PredictionRun& run, std::span<const LabeledQuery> queries);

struct EvalReport {
  std::string method_id;
  double auc = 0.0;
  std::vector<RocPoint> roc_points;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::map<std::string, double> p_values;  // other method id -> p
  std::optional<std::map<std::size_t, double>> per_k;
};

nlohmann::json to_json(const EvalReport& report);
std::string roc_csv(std::span<const RocPoint> points);

struct SweepResult {
  std::map<std::size_t, double> auc_by_k;
  std::size_t selected_k = 0;  // argmax, ties to the smaller k
};

inline const std::vector<std::size_t> kDefaultSweepKs = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

/// Dev AUC for each k. `scores_at_k` returns scores aligned with `labels`.
SweepResult sweep_k(std::span<const std::size_t> ks,
                    const std::function<std::vector<double>(std::size_t)>& scores_at_k,
                    std::span<const uint8_t> labels);

/// Formats a double so that it parses back to the same value.
std::string format_double(double x);

}  // namespace clarity::eval
