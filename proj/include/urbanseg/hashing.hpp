#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace urbanseg {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// First 16 hex digits of the SHA-256, used to name run artifacts.
std::string short_hash(std::string_view text);

}  // namespace urbanseg
