#include "wire_protocol.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace clarity::wire {

std::string encode_request(const PairRequest& request) {
  const nlohmann::json j = {
      {"pair_id", request.pair_id}, {"text_a", request.text_a}, {"text_b", request.text_b}};
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

Response decode_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw std::runtime_error("not valid JSON");
  }
  if (!j.is_object()) throw std::runtime_error("not a JSON object");
  if (j.contains("error")) {
    const auto& e = j["error"];
    throw std::runtime_error("scorer reported error: " + (e.is_string() ? e.get<std::string>() : e.dump()));
  }
  const auto id = j.find("pair_id");
  if (id == j.end() || !id->is_string()) throw std::runtime_error("missing string pair_id");
  const auto p = j.find("p_isnext");
  if (p == j.end() || !p->is_number()) throw std::runtime_error("missing numeric p_isnext");
  const double value = p->get<double>();
  if (!std::isfinite(value) || value < 0.0 || value > 1.0)
    throw std::runtime_error("p_isnext outside [0,1]");
  return {id->get<std::string>(), value};
}

}  // namespace clarity::wire
