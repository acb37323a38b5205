#include "tracekg/prompts.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "tracekg/checksum.hpp"
#include "tracekg/jsonl.hpp"

namespace tracekg {

namespace {

constexpr const char* kSystemMarker = "<<<system>>>";
constexpr const char* kUserMarker = "<<<user>>>";

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

// Finds "{word}" slots made of lowercase letters/underscores. JSON braces in
// template text never qualify because they are not followed by such a word.
std::optional<std::string> placeholder_at(std::string_view text, std::size_t pos) {
    if (text[pos] != '{') return std::nullopt;
    std::size_t end = pos + 1;
    while (end < text.size() && is_placeholder_char(text[end])) ++end;
    if (end == pos + 1 || end >= text.size() || text[end] != '}') return std::nullopt;
    return std::string(text.substr(pos + 1, end - pos - 1));
}

}  // namespace

const char* prompt_file_name(PromptName name) {
    switch (name) {
        case PromptName::Trace: return "trace.txt";
        case PromptName::Revise: return "revise.txt";
        case PromptName::Step1Entities: return "step1_entities.txt";
        case PromptName::Step2Finalize: return "step2_finalize.txt";
        case PromptName::SingleTraining: return "single_training.txt";
        case PromptName::ChoiceQuestions: return "choice_questions.txt";
        case PromptName::RegexTargets: return "regex_targets.txt";
        case PromptName::JudgePrecision: return "judge_precision.txt";
        case PromptName::JudgeRecall: return "judge_recall.txt";
    }
    throw PromptError("unknown prompt name");
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
    std::map<std::string, int> used;
    std::string out;
    out.reserve(user_template.size());
    for (std::size_t i = 0; i < user_template.size();) {
        auto slot = placeholder_at(user_template, i);
        if (!slot) {
            out.push_back(user_template[i]);
            ++i;
            continue;
        }
        auto it = vars.find(*slot);
        if (it == vars.end()) {
            throw PromptError("template '" + name + "' has unresolved placeholder {" + *slot + "}");
        }
        out += it->second;
        ++used[*slot];
        i += slot->size() + 2;
    }
    for (const auto& [key, value] : vars) {
        (void)value;
        if (!used.count(key)) {
            throw PromptError("template '" + name + "' has no placeholder {" + key + "}");
        }
    }
    return out;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
    static const PromptName all[] = {
        PromptName::Trace,          PromptName::Revise,       PromptName::Step1Entities,
        PromptName::Step2Finalize,  PromptName::SingleTraining, PromptName::ChoiceQuestions,
        PromptName::RegexTargets,   PromptName::JudgePrecision, PromptName::JudgeRecall,
    };
    PromptLibrary lib;
    for (PromptName name : all) {
        const std::string file = prompt_file_name(name);
        const std::string raw = read_text_file(dir / file);
        std::size_t sys_pos = raw.find(kSystemMarker);
        std::size_t user_pos = raw.find(kUserMarker);
        if (sys_pos == std::string::npos || user_pos == std::string::npos || user_pos < sys_pos) {
            throw PromptError("prompt file " + file + " needs " + kSystemMarker + " then " +
                              kUserMarker + " sections");
        }
        PromptTemplate tmpl;
        tmpl.name = file.substr(0, file.find('.'));
        std::size_t sys_start = sys_pos + std::string(kSystemMarker).size();
        std::string system = raw.substr(sys_start, user_pos - sys_start);
        std::string user = raw.substr(user_pos + std::string(kUserMarker).size());
        auto strip = [](std::string s) {
            while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            return s;
        };
        tmpl.system_text = strip(system);
        tmpl.user_template = strip(user);
        tmpl.checksum = checksum_hex(raw);
        lib.templates_[tmpl.name] = std::move(tmpl);
    }
    return lib;
}

std::filesystem::path PromptLibrary::default_dir() {
    if (const char* env = std::getenv("TRACEKG_PROMPTS"); env && *env) return env;
#ifdef TRACEKG_SOURCE_DIR
    return std::filesystem::path(TRACEKG_SOURCE_DIR) / "prompts";
#else
    return std::filesystem::path("prompts");
#endif
}

const PromptTemplate& PromptLibrary::get(PromptName name) const {
    std::string file = prompt_file_name(name);
    auto it = templates_.find(file.substr(0, file.find('.')));
    if (it == templates_.end()) throw PromptError("prompt not loaded: " + file);
    return it->second;
}

std::map<std::string, std::string> PromptLibrary::checksums() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, tmpl] : templates_) out[name] = tmpl.checksum;
    return out;
}

std::string render_ontology_block(const OntologyVocab& vocab) {
    std::ostringstream out;
    out << "Entity fields: name, type, alias (list), parent_entity.\n";
    out << "Relation fields: sub, rel (surface phrase), rel_type, obj.\n";
    out << "Entity types:";
    for (const auto& t : vocab.entity_types()) out << ' ' << t;
    out << "\nRelation types:";
    for (const auto& t : vocab.relation_types()) out << ' ' << t;
    out << "\nUse \"other\" when no listed type fits; keep rel as the surface phrase.";
    return out.str();
}

std::string render_edges_indexed(const KnowledgeGraph& graph) {
    std::ostringstream out;
    for (std::size_t i = 0; i < graph.relations().size(); ++i) {
        const Relation& r = graph.relations()[i];
        out << '[' << i << "] " << r.sub << " -- " << r.rel << " (" << r.rel_type << ") --> "
            << r.obj << '\n';
    }
    return out.str();
}

}  // namespace tracekg
