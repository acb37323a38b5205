#include "tracekg/textutil.hpp"

#include <cctype>

namespace tracekg {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Leading byte of a UTF-8 sequence, or any byte we cannot interpret.
bool is_utf8_lead(unsigned char b) { return (b & 0xC0) != 0x80; }

}  // namespace

std::size_t count_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::size_t utf8_length(std::string_view text) {
    std::size_t n = 0;
    for (unsigned char b : text) {
        if (is_utf8_lead(b)) ++n;
    }
    return n;
}

std::optional<std::string> utf8_substr(std::string_view text, std::size_t begin, std::size_t end) {
    if (begin > end) return std::nullopt;
    std::size_t scalar = 0;
    std::size_t byte_begin = text.size();
    std::size_t byte_end = text.size();
    bool have_begin = false;
    bool have_end = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!is_utf8_lead(static_cast<unsigned char>(text[i]))) continue;
        if (scalar == begin && !have_begin) {
            byte_begin = i;
            have_begin = true;
        }
        if (scalar == end && !have_end) {
            byte_end = i;
            have_end = true;
        }
        ++scalar;
    }
    if (begin == scalar && !have_begin) {
        byte_begin = text.size();
        have_begin = true;
    }
    if (end == scalar && !have_end) {
        byte_end = text.size();
        have_end = true;
    }
    if (!have_begin || !have_end) return std::nullopt;
    return std::string(text.substr(byte_begin, byte_end - byte_begin));
}

std::size_t byte_to_scalar_offset(std::string_view text, std::size_t byte_offset) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < byte_offset && i < text.size(); ++i) {
        if (is_utf8_lead(static_cast<unsigned char>(text[i]))) ++n;
    }
    return n;
}

std::string lower_ascii(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string normalize(std::string_view s) {
    static constexpr std::string_view kTrim = ".,;:'\"()[]";
    std::string lowered = lower_ascii(s);

    std::string collapsed;
    collapsed.reserve(lowered.size());
    bool pending_space = false;
    for (char c : lowered) {
        if (is_space(c)) {
            pending_space = !collapsed.empty();
            continue;
        }
        if (pending_space) {
            collapsed.push_back(' ');
            pending_space = false;
        }
        collapsed.push_back(c);
    }

    std::size_t begin = 0;
    std::size_t end = collapsed.size();
    auto trimmable = [&](char c) { return c == ' ' || kTrim.find(c) != std::string_view::npos; };
    while (begin < end && trimmable(collapsed[begin])) ++begin;
    while (end > begin && trimmable(collapsed[end - 1])) --end;
    return collapsed.substr(begin, end - begin);
}

std::string extract_json_payload(std::string_view response) {
    std::vector<std::string> lines = split_lines(response);
    // Fenced blocks win; take the last complete one.
    std::optional<std::pair<std::size_t, std::size_t>> last_block;
    std::optional<std::size_t> open;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.rfind("```", 0) != 0) continue;
        if (!open) {
            open = i;
        } else {
            last_block = {*open + 1, i};
            open.reset();
        }
    }
    if (last_block) {
        std::string body;
        for (std::size_t i = last_block->first; i < last_block->second; ++i) {
            body += lines[i];
            body += '\n';
        }
        return body;
    }
    std::size_t begin = response.find_first_of("{[");
    if (begin == std::string_view::npos) return std::string(response);
    char close = response[begin] == '{' ? '}' : ']';
    std::size_t end = response.find_last_of(close);
    if (end == std::string_view::npos || end < begin) return std::string(response);
    return std::string(response.substr(begin, end - begin + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.emplace_back(line);
            start = i + 1;
        }
    }
    if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n') {
        lines.pop_back();
    }
    return lines;
}

}  // namespace tracekg
