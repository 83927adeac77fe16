#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace morphocause {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
/// Digest of a file's contents. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace morphocause
