#pragma once

#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracekg/graph.hpp"
#include "tracekg/llm_context.hpp"

namespace tracekg {

struct Triple {
    std::string sub;
    std::string rel;
    std::string obj;

    bool operator==(const Triple&) const = default;
};

enum class ChoiceFamily { Precision, Hallucination };
enum class ChoicePattern {
    SupportedTriples,
    IncorrectTriples,
    RelationIllusion,
    ObjectIllusion,
    SubjectIllusion,
    TotalIllusion,
    PartialIllusion,
};

std::string to_string(ChoiceFamily family);
std::string to_string(ChoicePattern pattern);
std::optional<ChoiceFamily> family_from_string(std::string_view s);
std::optional<ChoicePattern> pattern_from_string(std::string_view s);
ChoiceFamily family_of(ChoicePattern pattern);

/// Spaced em dash; the bank file header records this exact separator.
inline constexpr const char* kOptionSeparator = " \xE2\x80\x94 ";
inline constexpr const char* kBankFormatVersion = "tb-v1";

std::string render_option(const Triple& triple);
std::optional<Triple> parse_option_triple(std::string_view option);

/// Four-option multi-select question; the answer may be any subset of A-D.
struct ChoiceQuestion {
    std::string article_id;
    ChoiceFamily family = ChoiceFamily::Precision;
    ChoicePattern pattern = ChoicePattern::SupportedTriples;
    std::string stem;
    std::vector<std::string> options;
    std::set<char> answer_set;

    bool operator==(const ChoiceQuestion&) const = default;
};

/// One regex triplet per ground-truth edge; each pattern must full-match its
/// own edge's normalized field.
struct RegexTarget {
    std::string article_id;
    std::size_t edge_index = 0;
    std::string sub_pattern;
    std::string rel_pattern;
    std::string obj_pattern;

    bool operator==(const RegexTarget&) const = default;
};

struct TaskBank {
    std::string article_id;
    std::vector<ChoiceQuestion> choices;
    std::vector<RegexTarget> regex_targets;
    std::optional<double> complexity;
};

struct PatternError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyBank : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SelfMatchFailure : std::runtime_error {
    SelfMatchFailure(std::string msg, std::vector<std::size_t> e)
        : std::runtime_error(std::move(msg)), edges(std::move(e)) {}
    std::vector<std::size_t> edges;
};

/// Portable regex subset: literals, character classes, alternation, optional
/// and greedy quantifiers, non-capturing groups. No backreferences,
/// lookaround, or anchor characters.
bool pattern_in_portable_subset(std::string_view pattern, std::string* reason = nullptr);

/// Compiles within the portable subset, case-insensitive. Throws PatternError.
std::regex compile_target_pattern(const std::string& pattern);

/// True iff all three patterns full-match the normalized predicted fields.
bool match_triple(const Triple& pred, const RegexTarget& target);

std::vector<ChoiceQuestion> build_choice_questions(const AlignmentPair& pair, const LlmContext& ctx,
                                                   std::size_t max_per_article = 20);
std::vector<RegexTarget> build_regex_targets(const AlignmentPair& pair, const LlmContext& ctx);

enum class BankViolationKind {
    WrongArticle,
    TooManyQuestions,
    BadOptionCount,
    OptionNotTriple,
    BadAnswerSet,
    PatternFamilyMismatch,
    UnsupportedCorrectOption,
    MissingTarget,
    DuplicateTarget,
    PatternInvalid,
    SelfMatchFailed,
};

std::string to_string(BankViolationKind kind);

struct BankViolation {
    BankViolationKind kind;
    std::string subject;
    std::string detail;
};

/// Re-checks every bank invariant plus self-match against the pair. Empty
/// result means the bank is sound for training.
std::vector<BankViolation> validate_taskbank(const TaskBank& bank, const AlignmentPair& pair);

nlohmann::json choice_to_json(const ChoiceQuestion& q);
ChoiceQuestion choice_from_json(const nlohmann::json& row);
nlohmann::json target_to_json(const RegexTarget& t);
RegexTarget target_from_json(const nlohmann::json& row);

}  // namespace tracekg
