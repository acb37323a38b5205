#pragma once

#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tracekg/taskbank.hpp"

namespace tracekg {

struct EmptyTargets : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kFormatBonus = 0.1;

struct AnswerParse {
    std::set<char> answers;
    bool format_ok = false;
};

/// Lenient parse of a choice rollout. The final non-blank line must be
/// "Answer: <letters or none>"; format_ok additionally needs at least one
/// non-blank reasoning line before it.
AnswerParse parse_choice_output(std::string_view text);

struct TripleParse {
    std::vector<Triple> triples;
    bool format_ok = false;
};

/// Parses predicted triples from the last fenced code block holding a JSON
/// list of {"sub","rel","obj"}; format_ok needs a reasoning line before it.
TripleParse parse_regex_output(std::string_view text);

/// 1.0 exact match (including both empty), 0.5 overlap, 0.0 otherwise.
double choice_reward(const std::set<char>& pred, const std::set<char>& gt);

struct RegexRewardResult {
    double reward = 0.0;
    std::vector<std::size_t> matched;
};

/// n_match / n_gt, where a target counts as matched when one predicted triple
/// matches all three of its patterns. Throws EmptyTargets when n_gt == 0.
RegexRewardResult regex_reward(std::span<const Triple> pred, std::span<const RegexTarget> targets);

struct RegexTask {
    std::string article_id;
    std::vector<RegexTarget> targets;
};

using RewardTask = std::variant<ChoiceQuestion, RegexTask>;

struct RewardBreakdown {
    double format_bonus = 0.0;
    double main = 0.0;
    double total = 0.0;
    nlohmann::json detail;
};

RewardBreakdown score_rollout(const RewardTask& task, std::string_view output_text);

}  // namespace tracekg
