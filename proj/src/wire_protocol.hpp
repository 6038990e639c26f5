#pragma once

#include <string>
#include <string_view>

#include "clarity/edge_oracle.hpp"

namespace clarity::wire {

struct Response {
  std::string pair_id;
  double p_isnext = 0.0;
};

std::string encode_request(const PairRequest& request);

/// Parses one response line. Throws std::runtime_error describing the defect.
Response decode_response(std::string_view line);

}  // namespace clarity::wire
