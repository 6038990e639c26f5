#pragma once

#include <span>
#include <string_view>

#include "clarity/corpus_store.hpp"

namespace clarity::qpp {

/// Score distribution of one query's top-k retrieval plus its normalizers.
struct QppInput {
  std::span<const double> scores;  // top-k retrieval scores, descending
  double corpus_score = 1.0;       // collection-level score, > 0
  std::size_t query_length = 1;    // number of query terms, >= 1
};

/// Mean gain of the top-k scores over the corpus score, scaled by 1/sqrt(|q|).
double wig(const QppInput& in);

/// Population standard deviation of the top-k scores over the corpus score.
double nqc(const QppInput& in);

/// Score magnitude times variance: mean of s * |ln(s / mean)| over the corpus score.
/// Throws InvalidArgument on any non-positive score.
double smv(const QppInput& in);

inline constexpr double kDefaultNSigmaPercent = 50.0;

/// Standard deviation of the scores that reach `percent`% of the top score, over the corpus score.
double n_sigma_percent(const QppInput& in, double percent = kDefaultNSigmaPercent);

/// Scores of a ranked list, in rank order.
std::vector<double> scores_of(const RankedList& ranked);

}  // namespace clarity::qpp
