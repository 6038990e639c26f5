#include "clarity/qpp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "clarity/errors.hpp"

namespace clarity::qpp {
namespace {

void validate(const QppInput& in, const char* method) {
  if (in.scores.empty()) throw InvalidArgument(std::string(method) + ": empty ranked list");
  if (!(in.corpus_score > 0.0)) throw InvalidArgument(std::string(method) + ": corpus score must be positive");
  if (in.query_length == 0) throw InvalidArgument(std::string(method) + ": query length must be >= 1");
}

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_stddev(std::span<const double> xs) {
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

double wig(const QppInput& in) {
  validate(in, "wig");
  double gain = 0.0;
  for (double s : in.scores) gain += s - in.corpus_score;
  gain /= static_cast<double>(in.scores.size());
  return gain / std::sqrt(static_cast<double>(in.query_length));
}

double nqc(const QppInput& in) {
  validate(in, "nqc");
  return population_stddev(in.scores) / in.corpus_score;
}

double smv(const QppInput& in) {
  validate(in, "smv");
  for (double s : in.scores)
    if (!(s > 0.0)) throw InvalidArgument("smv: scores must be strictly positive");
  const double mu = mean(in.scores);
  double acc = 0.0;
  for (double s : in.scores) acc += s * std::abs(std::log(s / mu));
  return acc / static_cast<double>(in.scores.size()) / in.corpus_score;
}

double n_sigma_percent(const QppInput& in, double percent) {
  validate(in, "n_sigma_percent");
  if (!(percent > 0.0 && percent <= 100.0)) throw InvalidArgument("n_sigma_percent: percent must be in (0, 100]");
  const double cutoff = percent / 100.0 * in.scores.front();
  std::vector<double> kept;
  for (double s : in.scores)
    if (s >= cutoff) kept.push_back(s);
  return population_stddev(kept) / in.corpus_score;
}

std::vector<double> scores_of(const RankedList& ranked) {
  std::vector<double> out;
  out.reserve(ranked.entries.size());
  for (const auto& e : ranked.entries) out.push_back(e.score);
  return out;
}

}  // namespace clarity::qpp
