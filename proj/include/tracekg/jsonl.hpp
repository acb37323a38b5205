#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tracekg {

/// One parsed object per non-empty line. Throws std::runtime_error on bad JSON.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Compact one-object-per-line encoding, LF endings, trailing newline.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace tracekg
