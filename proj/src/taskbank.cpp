#include "tracekg/taskbank.hpp"

#include <algorithm>

namespace tracekg {

using nlohmann::json;

std::string to_string(ChoiceFamily family) {
    return family == ChoiceFamily::Precision ? "precision" : "hallucination";
}

std::string to_string(ChoicePattern pattern) {
    switch (pattern) {
        case ChoicePattern::SupportedTriples: return "supported-triples";
        case ChoicePattern::IncorrectTriples: return "incorrect-triples";
        case ChoicePattern::RelationIllusion: return "relation-illusion";
        case ChoicePattern::ObjectIllusion: return "object-illusion";
        case ChoicePattern::SubjectIllusion: return "subject-illusion";
        case ChoicePattern::TotalIllusion: return "total-illusion";
        case ChoicePattern::PartialIllusion: return "partial-illusion";
    }
    return "supported-triples";
}

std::optional<ChoiceFamily> family_from_string(std::string_view s) {
    if (s == "precision") return ChoiceFamily::Precision;
    if (s == "hallucination") return ChoiceFamily::Hallucination;
    return std::nullopt;
}

std::optional<ChoicePattern> pattern_from_string(std::string_view s) {
    if (s == "supported-triples") return ChoicePattern::SupportedTriples;
    if (s == "incorrect-triples") return ChoicePattern::IncorrectTriples;
    if (s == "relation-illusion") return ChoicePattern::RelationIllusion;
    if (s == "object-illusion") return ChoicePattern::ObjectIllusion;
    if (s == "subject-illusion") return ChoicePattern::SubjectIllusion;
    if (s == "total-illusion") return ChoicePattern::TotalIllusion;
    if (s == "partial-illusion") return ChoicePattern::PartialIllusion;
    return std::nullopt;
}

ChoiceFamily family_of(ChoicePattern pattern) {
    switch (pattern) {
        case ChoicePattern::SupportedTriples:
        case ChoicePattern::IncorrectTriples:
            return ChoiceFamily::Precision;
        default:
            return ChoiceFamily::Hallucination;
    }
}

std::string to_string(BankViolationKind kind) {
    switch (kind) {
        case BankViolationKind::WrongArticle: return "wrong-article";
        case BankViolationKind::TooManyQuestions: return "too-many-questions";
        case BankViolationKind::BadOptionCount: return "bad-option-count";
        case BankViolationKind::OptionNotTriple: return "option-not-triple";
        case BankViolationKind::BadAnswerSet: return "bad-answer-set";
        case BankViolationKind::PatternFamilyMismatch: return "pattern-family-mismatch";
        case BankViolationKind::UnsupportedCorrectOption: return "unsupported-correct-option";
        case BankViolationKind::MissingTarget: return "missing-target";
        case BankViolationKind::DuplicateTarget: return "duplicate-target";
        case BankViolationKind::PatternInvalid: return "pattern-invalid";
        case BankViolationKind::SelfMatchFailed: return "self-match-failed";
    }
    return "unknown";
}

std::string render_option(const Triple& triple) {
    return triple.sub + kOptionSeparator + triple.rel + kOptionSeparator + triple.obj;
}

std::optional<Triple> parse_option_triple(std::string_view option) {
    const std::string_view sep = kOptionSeparator;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = option.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(option.substr(start));
            break;
        }
        parts.emplace_back(option.substr(start, pos - start));
        start = pos + sep.size();
    }
    if (parts.size() != 3) return std::nullopt;
    for (const std::string& p : parts) {
        if (p.empty()) return std::nullopt;
    }
    return Triple{parts[0], parts[1], parts[2]};
}

bool pattern_in_portable_subset(std::string_view pattern, std::string* reason) {
    auto fail = [&](const std::string& why) {
        if (reason) *reason = why;
        return false;
    };
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '\\') {
            if (i + 1 >= pattern.size()) return fail("dangling backslash");
            char next = pattern[i + 1];
            if (next >= '1' && next <= '9') return fail("backreferences are not portable");
            if (next == 'b' || next == 'B') return fail("word-boundary anchors are not portable");
            ++i;
            continue;
        }
        if (c == '^' || c == '$') {
            return fail("anchors are implied by full-match semantics");
        }
        if (c == '(' && i + 1 < pattern.size() && pattern[i + 1] == '?') {
            if (i + 2 >= pattern.size() || pattern[i + 2] != ':') {
                return fail("lookaround and special groups are not portable");
            }
        }
    }
    return true;
}

std::regex compile_target_pattern(const std::string& pattern) {
    std::string reason;
    if (!pattern_in_portable_subset(pattern, &reason)) {
        throw PatternError("pattern '" + pattern + "': " + reason);
    }
    try {
        return std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
        throw PatternError("pattern '" + pattern + "' does not compile: " + e.what());
    }
}

bool match_triple(const Triple& pred, const RegexTarget& target) {
    std::regex sub_re = compile_target_pattern(target.sub_pattern);
    std::regex rel_re = compile_target_pattern(target.rel_pattern);
    std::regex obj_re = compile_target_pattern(target.obj_pattern);
    return std::regex_match(normalize(pred.sub), sub_re) &&
           std::regex_match(normalize(pred.rel), rel_re) &&
           std::regex_match(normalize(pred.obj), obj_re);
}

namespace {

bool triple_equals_edge(const Triple& t, const Relation& r) {
    return normalize(t.sub) == normalize(r.sub) && normalize(t.rel) == normalize(r.rel) &&
           normalize(t.obj) == normalize(r.obj);
}

bool answers_from_json(const json& arr, std::set<char>* out) {
    if (!arr.is_array()) return false;
    for (const auto& item : arr) {
        if (!item.is_string()) return false;
        std::string s = item.get<std::string>();
        if (s.size() != 1) return false;
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        if (c < 'A' || c > 'D') return false;
        out->insert(c);
    }
    return true;
}

// Returns nullopt when the generated item breaks any invariant; broken
// questions are dropped, never repaired.
std::optional<ChoiceQuestion> choice_from_generated(const json& item, const AlignmentPair& pair) {
    if (!item.is_object()) return std::nullopt;
    ChoiceQuestion q;
    q.article_id = pair.article.id;
    auto family = family_from_string(item.value("family", std::string()));
    auto pattern = pattern_from_string(item.value("pattern", std::string()));
    if (!family || !pattern || family_of(*pattern) != *family) return std::nullopt;
    q.family = *family;
    q.pattern = *pattern;
    q.stem = item.value("stem", std::string());
    if (q.stem.empty()) return std::nullopt;

    auto options = item.find("options");
    if (options == item.end() || !options->is_array() || options->size() != 4) return std::nullopt;
    for (const auto& opt : *options) {
        if (!opt.is_string()) return std::nullopt;
        std::string text = opt.get<std::string>();
        if (!parse_option_triple(text)) return std::nullopt;
        q.options.push_back(std::move(text));
    }

    auto answers = item.find("answer");
    if (answers == item.end() || !answers_from_json(*answers, &q.answer_set)) return std::nullopt;

    if (q.pattern == ChoicePattern::SupportedTriples) {
        for (char letter : q.answer_set) {
            const std::string& option = q.options[static_cast<std::size_t>(letter - 'A')];
            auto triple = parse_option_triple(option);
            bool grounded = false;
            for (const Relation& r : pair.graph.relations()) {
                if (triple_equals_edge(*triple, r)) {
                    grounded = true;
                    break;
                }
            }
            if (!grounded) return std::nullopt;
        }
    }
    return q;
}

}  // namespace

std::vector<ChoiceQuestion> build_choice_questions(const AlignmentPair& pair, const LlmContext& ctx,
                                                   std::size_t max_per_article) {
    if (max_per_article < 1) throw std::invalid_argument("max_per_article must be >= 1");
    const PromptTemplate& tmpl = ctx.prompts.get(PromptName::ChoiceQuestions);
    ChatRequest req;
    req.model = ctx.options.model;
    req.system_text = tmpl.system_text;
    req.user_text = tmpl.render({
        {"article", pair.article.text},
        {"graph", serialize_graph(pair.graph)},
        {"max_questions", std::to_string(max_per_article)},
    });
    req.temperature = ctx.options.extract_temperature;
    req.max_output_tokens = ctx.options.extract_max_tokens;
    req.request_id = pair.article.id + ":choice";

    const std::string response = ctx.gateway.send(req);
    json items;
    try {
        items = json::parse(extract_json_payload(response));
    } catch (const json::exception&) {
        throw EmptyBank("choice generation for " + pair.article.id + " was not a JSON list");
    }
    std::vector<ChoiceQuestion> out;
    if (items.is_array()) {
        for (const auto& item : items) {
            if (out.size() >= max_per_article) break;
            if (auto q = choice_from_generated(item, pair)) out.push_back(std::move(*q));
        }
    }
    if (out.empty()) {
        throw EmptyBank("no valid choice questions generated for " + pair.article.id);
    }
    return out;
}

namespace {

std::string render_edges_subset(const KnowledgeGraph& graph,
                                const std::vector<std::size_t>& indices) {
    std::string out;
    for (std::size_t i : indices) {
        const Relation& r = graph.relations()[i];
        out += '[' + std::to_string(i) + "] " + r.sub + " -- " + r.rel + " (" + r.rel_type +
               ") --> " + r.obj + '\n';
    }
    return out;
}

bool target_self_matches(const RegexTarget& target, const Relation& edge) {
    try {
        return match_triple(Triple{edge.sub, edge.rel, edge.obj}, target);
    } catch (const PatternError&) {
        return false;
    }
}

void absorb_targets(const json& items, const AlignmentPair& pair,
                    std::vector<std::optional<RegexTarget>>* slots) {
    if (!items.is_array()) return;
    const auto& relations = pair.graph.relations();
    for (const auto& item : items) {
        if (!item.is_object()) continue;
        auto idx = item.find("edge_index");
        if (idx == item.end() || !idx->is_number_integer()) continue;
        long long index = idx->get<long long>();
        if (index < 0 || static_cast<std::size_t>(index) >= relations.size()) continue;
        auto i = static_cast<std::size_t>(index);
        if ((*slots)[i]) continue;
        RegexTarget t;
        t.article_id = pair.article.id;
        t.edge_index = i;
        t.sub_pattern = item.value("sub_pattern", std::string());
        t.rel_pattern = item.value("rel_pattern", std::string());
        t.obj_pattern = item.value("obj_pattern", std::string());
        if (t.sub_pattern.empty() || t.rel_pattern.empty() || t.obj_pattern.empty()) continue;
        if (!target_self_matches(t, relations[i])) continue;
        (*slots)[i] = std::move(t);
    }
}

}  // namespace

std::vector<RegexTarget> build_regex_targets(const AlignmentPair& pair, const LlmContext& ctx) {
    const auto& relations = pair.graph.relations();
    if (relations.empty()) throw std::invalid_argument("pair has no relations");

    const PromptTemplate& tmpl = ctx.prompts.get(PromptName::RegexTargets);
    auto request = [&](const std::string& edges, const std::string& suffix,
                       const std::string& note) {
        ChatRequest req;
        req.model = ctx.options.model;
        req.system_text = tmpl.system_text;
        req.user_text = tmpl.render({{"edges", edges}}) + note;
        req.temperature = ctx.options.extract_temperature;
        req.max_output_tokens = ctx.options.extract_max_tokens;
        req.request_id = pair.article.id + suffix;
        return req;
    };

    std::vector<std::optional<RegexTarget>> slots(relations.size());
    std::vector<std::size_t> all(relations.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    std::string response = ctx.gateway.send(request(render_edges_subset(pair.graph, all), ":regex", ""));
    try {
        absorb_targets(json::parse(extract_json_payload(response)), pair, &slots);
    } catch (const json::exception&) {
        // fall through to the regeneration pass
    }

    std::vector<std::size_t> failing;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) failing.push_back(i);
    }
    if (!failing.empty()) {
        response = ctx.gateway.send(request(
            render_edges_subset(pair.graph, failing), ":regex-retry",
            "\n\nYour previous patterns for these edges were missing or failed the self-match "
            "check. Regenerate them."));
        try {
            absorb_targets(json::parse(extract_json_payload(response)), pair, &slots);
        } catch (const json::exception&) {
        }
        failing.clear();
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i]) failing.push_back(i);
        }
        if (!failing.empty()) {
            std::string msg = "regex targets failed self-match for " + pair.article.id + ", edges:";
            for (std::size_t i : failing) msg += ' ' + std::to_string(i);
            throw SelfMatchFailure(msg, std::move(failing));
        }
    }

    std::vector<RegexTarget> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

std::vector<BankViolation> validate_taskbank(const TaskBank& bank, const AlignmentPair& pair) {
    std::vector<BankViolation> out;
    if (bank.article_id != pair.article.id) {
        out.push_back({BankViolationKind::WrongArticle, bank.article_id,
                       "bank belongs to a different article than the pair"});
    }
    if (bank.choices.size() > 20) {
        out.push_back({BankViolationKind::TooManyQuestions, bank.article_id,
                       std::to_string(bank.choices.size()) + " questions, limit is 20"});
    }
    for (std::size_t qi = 0; qi < bank.choices.size(); ++qi) {
        const ChoiceQuestion& q = bank.choices[qi];
        const std::string subject = "choice#" + std::to_string(qi);
        if (q.options.size() != 4) {
            out.push_back({BankViolationKind::BadOptionCount, subject,
                           std::to_string(q.options.size()) + " options"});
            continue;
        }
        for (const std::string& opt : q.options) {
            if (!parse_option_triple(opt)) {
                out.push_back({BankViolationKind::OptionNotTriple, subject, opt});
            }
        }
        for (char c : q.answer_set) {
            if (c < 'A' || c > 'D') {
                out.push_back({BankViolationKind::BadAnswerSet, subject, std::string(1, c)});
            }
        }
        if (family_of(q.pattern) != q.family) {
            out.push_back({BankViolationKind::PatternFamilyMismatch, subject,
                           to_string(q.pattern) + " is not a " + to_string(q.family) + " pattern"});
        }
        if (q.pattern == ChoicePattern::SupportedTriples) {
            for (char letter : q.answer_set) {
                if (letter < 'A' || letter > 'D') continue;
                auto triple = parse_option_triple(q.options[static_cast<std::size_t>(letter - 'A')]);
                if (!triple) continue;
                bool grounded = false;
                for (const Relation& r : pair.graph.relations()) {
                    if (triple_equals_edge(*triple, r)) {
                        grounded = true;
                        break;
                    }
                }
                if (!grounded) {
                    out.push_back({BankViolationKind::UnsupportedCorrectOption, subject,
                                   std::string("option ") + letter +
                                       " is marked correct but is not a graph edge"});
                }
            }
        }
    }

    const std::size_t n = pair.graph.relations().size();
    std::vector<int> seen(n, 0);
    for (const RegexTarget& t : bank.regex_targets) {
        const std::string subject = "edge#" + std::to_string(t.edge_index);
        if (t.edge_index >= n) {
            out.push_back({BankViolationKind::MissingTarget, subject, "edge index out of range"});
            continue;
        }
        if (++seen[t.edge_index] > 1) {
            out.push_back({BankViolationKind::DuplicateTarget, subject, "duplicate edge index"});
            continue;
        }
        std::string reason;
        bool compiles = true;
        for (const std::string& p : {t.sub_pattern, t.rel_pattern, t.obj_pattern}) {
            try {
                compile_target_pattern(p);
            } catch (const PatternError& e) {
                compiles = false;
                out.push_back({BankViolationKind::PatternInvalid, subject, e.what()});
            }
        }
        if (compiles && !target_self_matches(t, pair.graph.relations()[t.edge_index])) {
            out.push_back({BankViolationKind::SelfMatchFailed, subject,
                           "target does not match its own edge"});
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i] == 0) {
            out.push_back({BankViolationKind::MissingTarget, "edge#" + std::to_string(i),
                           "no regex target for this edge"});
        }
    }
    return out;
}

json choice_to_json(const ChoiceQuestion& q) {
    json row;
    row["article_id"] = q.article_id;
    row["family"] = to_string(q.family);
    row["pattern"] = to_string(q.pattern);
    row["stem"] = q.stem;
    row["options"] = q.options;
    json answers = json::array();
    for (char c : q.answer_set) answers.push_back(std::string(1, c));
    row["answer"] = std::move(answers);
    return row;
}

ChoiceQuestion choice_from_json(const json& row) {
    ChoiceQuestion q;
    q.article_id = row.at("article_id").get<std::string>();
    auto family = family_from_string(row.at("family").get<std::string>());
    auto pattern = pattern_from_string(row.at("pattern").get<std::string>());
    if (!family || !pattern) throw MalformedDocument("unknown choice family or pattern");
    q.family = *family;
    q.pattern = *pattern;
    q.stem = row.at("stem").get<std::string>();
    q.options = row.at("options").get<std::vector<std::string>>();
    if (!answers_from_json(row.at("answer"), &q.answer_set)) {
        throw MalformedDocument("choice answer must be a list of letters A-D");
    }
    return q;
}

json target_to_json(const RegexTarget& t) {
    json row;
    row["article_id"] = t.article_id;
    row["edge_index"] = t.edge_index;
    row["sub_pattern"] = t.sub_pattern;
    row["rel_pattern"] = t.rel_pattern;
    row["obj_pattern"] = t.obj_pattern;
    return row;
}

RegexTarget target_from_json(const json& row) {
    RegexTarget t;
    t.article_id = row.at("article_id").get<std::string>();
    t.edge_index = row.at("edge_index").get<std::size_t>();
    t.sub_pattern = row.at("sub_pattern").get<std::string>();
    t.rel_pattern = row.at("rel_pattern").get<std::string>();
    t.obj_pattern = row.at("obj_pattern").get<std::string>();
    return t;
}

}  // namespace tracekg
