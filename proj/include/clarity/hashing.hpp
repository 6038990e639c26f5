#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace clarity {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Lowercase hex SHA-256 of a file's contents. Throws DataError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Content key for an ordered text pair; used as the wire pair_id and cache key.
std::string pair_key(std::string_view text_a, std::string_view text_b);

}  // namespace clarity
