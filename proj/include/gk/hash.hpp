#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace gk {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const char> bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace gk
