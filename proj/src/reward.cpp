#include "tracekg/reward.hpp"

#include <algorithm>
#include <cctype>

#include "tracekg/textutil.hpp"

namespace tracekg {

using nlohmann::json;

namespace {

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                       [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Parses "Answer: A, C" / "answer: none" lines. Any other shape is rejected.
std::optional<std::set<char>> parse_answer_line(std::string_view line) {
    line = trim_view(line);
    if (line.size() < 7) return std::nullopt;
    std::string head = lower_ascii(line.substr(0, 6));
    if (head != "answer") return std::nullopt;
    line.remove_prefix(6);
    line = trim_view(line);
    if (line.empty() || line.front() != ':') return std::nullopt;
    line.remove_prefix(1);
    std::string payload = lower_ascii(trim_view(line));
    if (payload.empty()) return std::nullopt;
    if (payload == "none") return std::set<char>{};

    std::set<char> answers;
    std::size_t start = 0;
    while (start <= payload.size()) {
        std::size_t comma = payload.find(',', start);
        std::string_view token(payload);
        token = token.substr(start, (comma == std::string::npos ? payload.size() : comma) - start);
        token = trim_view(token);
        if (token.size() != 1 || token[0] < 'a' || token[0] > 'd') return std::nullopt;
        answers.insert(static_cast<char>(std::toupper(static_cast<unsigned char>(token[0]))));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return answers;
}

}  // namespace

AnswerParse parse_choice_output(std::string_view text) {
    AnswerParse result;
    std::vector<std::string> lines = split_lines(text);
    std::optional<std::size_t> last_content;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!is_blank(lines[i])) last_content = i;
    }
    if (!last_content) return result;

    auto answers = parse_answer_line(lines[*last_content]);
    if (!answers) return result;
    result.answers = std::move(*answers);

    for (std::size_t i = 0; i < *last_content; ++i) {
        if (!is_blank(lines[i])) {
            result.format_ok = true;
            break;
        }
    }
    return result;
}

TripleParse parse_regex_output(std::string_view text) {
    TripleParse result;
    std::vector<std::string> lines = split_lines(text);

    // Locate the last complete fenced block.
    std::optional<std::size_t> open;
    std::optional<std::pair<std::size_t, std::size_t>> last_block;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = trim_view(lines[i]);
        if (line.rfind("```", 0) != 0) continue;
        if (!open) {
            open = i;
        } else {
            last_block = {*open, i};
            open.reset();
        }
    }
    if (!last_block) return result;

    std::string body;
    for (std::size_t i = last_block->first + 1; i < last_block->second; ++i) {
        body += lines[i];
        body += '\n';
    }

    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception&) {
        return result;
    }
    if (!doc.is_array()) return result;
    std::vector<Triple> triples;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("sub") || !item.contains("rel") ||
            !item.contains("obj") || !item["sub"].is_string() || !item["rel"].is_string() ||
            !item["obj"].is_string()) {
            return result;
        }
        triples.push_back(Triple{item["sub"].get<std::string>(), item["rel"].get<std::string>(),
                                 item["obj"].get<std::string>()});
    }
    result.triples = std::move(triples);

    for (std::size_t i = 0; i < last_block->first; ++i) {
        if (!is_blank(lines[i])) {
            result.format_ok = true;
            break;
        }
    }
    return result;
}

double choice_reward(const std::set<char>& pred, const std::set<char>& gt) {
    if (pred == gt) return 1.0;
    for (char c : pred) {
        if (gt.count(c)) return 0.5;
    }
    return 0.0;
}

RegexRewardResult regex_reward(std::span<const Triple> pred, std::span<const RegexTarget> targets) {
    if (targets.empty()) throw EmptyTargets("regex reward needs at least one target");
    RegexRewardResult result;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (const Triple& t : pred) {
            if (match_triple(t, targets[i])) {
                result.matched.push_back(i);
                break;
            }
        }
    }
    result.reward =
        static_cast<double>(result.matched.size()) / static_cast<double>(targets.size());
    return result;
}

RewardBreakdown score_rollout(const RewardTask& task, std::string_view output_text) {
    RewardBreakdown out;
    if (const auto* choice = std::get_if<ChoiceQuestion>(&task)) {
        AnswerParse parsed = parse_choice_output(output_text);
        out.main = choice_reward(parsed.answers, choice->answer_set);
        out.format_bonus = parsed.format_ok ? kFormatBonus : 0.0;
        json pred = json::array();
        for (char c : parsed.answers) pred.push_back(std::string(1, c));
        json gt = json::array();
        for (char c : choice->answer_set) gt.push_back(std::string(1, c));
        out.detail = json{{"kind", "choice"},
                          {"pred_answers", std::move(pred)},
                          {"gt_answers", std::move(gt)},
                          {"format_ok", parsed.format_ok}};
    } else {
        const auto& regex_task = std::get<RegexTask>(task);
        TripleParse parsed = parse_regex_output(output_text);
        RegexRewardResult r = regex_reward(parsed.triples, regex_task.targets);
        out.main = r.reward;
        out.format_bonus = parsed.format_ok ? kFormatBonus : 0.0;
        out.detail = json{{"kind", "regex"},
                          {"matched_targets", r.matched},
                          {"n_match", r.matched.size()},
                          {"n_gt", regex_task.targets.size()},
                          {"n_pred", parsed.triples.size()},
                          {"format_ok", parsed.format_ok}};
    }
    out.total = out.format_bonus + out.main;
    return out;
}

}  // namespace tracekg
