#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace clarity {

/// Bad or inconsistent input data (corpus, dataset, run files, index).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A successor scorer failed. Carries the ids of the pairs that were in flight.
class ScorerError : public std::runtime_error {
 public:
  explicit ScorerError(const std::string& what, std::vector<std::string> pair_ids = {})
      : std::runtime_error(what), pair_ids_(std::move(pair_ids)) {}

  const std::vector<std::string>& pair_ids() const noexcept { return pair_ids_; }

 private:
  std::vector<std::string> pair_ids_;
};

/// Violated operation precondition (bad argument, degenerate input).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace clarity
