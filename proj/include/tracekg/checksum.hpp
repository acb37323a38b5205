#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tracekg {

inline constexpr const char* kChecksumAlgo = "fnv1a64";

std::uint64_t fnv1a64(std::string_view data);

/// 16-digit lowercase hex of fnv1a64(data).
std::string checksum_hex(std::string_view data);

/// Checksum of a file's raw bytes. Throws std::runtime_error when unreadable.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace tracekg
