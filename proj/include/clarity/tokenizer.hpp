#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clarity {

/// Identifier recorded in index metadata; bump when tokenization changes.
inline constexpr std::string_view kTokenizerId = "icu-lower-alnum-v1";

/// Splits UTF-8 text into lowercased runs of Unicode alphanumeric code points.
/// Everything else (punctuation, whitespace, symbols, invalid bytes) separates tokens.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace clarity
