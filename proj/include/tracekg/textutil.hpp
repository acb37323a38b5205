#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracekg {

/// Number of maximal non-whitespace runs in `text` (ASCII whitespace).
std::size_t count_tokens(std::string_view text);

/// Length of `text` in Unicode scalar values. Invalid bytes count as one scalar.
std::size_t utf8_length(std::string_view text);

/// Substring by scalar-value offsets [begin, end). Returns nullopt when out of bounds.
std::optional<std::string> utf8_substr(std::string_view text, std::size_t begin, std::size_t end);

/// Scalar-value offset of the given byte offset into `text`.
std::size_t byte_to_scalar_offset(std::string_view text, std::size_t byte_offset);

std::string lower_ascii(std::string_view s);

inline constexpr const char* kNormalizationVersion = "norm-v1";

/// Matching normalization: ASCII lowercase, collapse internal whitespace to
/// single spaces, strip leading/trailing whitespace and .,;:'"()[] .
std::string normalize(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);

/// Best-effort JSON payload of an LLM response: the last fenced code block
/// when one exists, otherwise the outermost {...} or [...] slice.
std::string extract_json_payload(std::string_view response);

}  // namespace tracekg
