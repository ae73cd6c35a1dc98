#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace drsc {

/// Hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Derives an independent 64-bit seed for a numbered substream.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace drsc
