#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "tracekg/graph.hpp"
#include "tracekg/ontology.hpp"

namespace tracekg {

struct PromptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PromptName {
    Trace,
    Revise,
    Step1Entities,
    Step2Finalize,
    SingleTraining,
    ChoiceQuestions,
    RegexTargets,
    JudgePrecision,
    JudgeRecall,
};

const char* prompt_file_name(PromptName name);

/// System text plus a user template with {placeholder} slots. Templates live
/// in editable files and are versioned by checksum in run manifests.
struct PromptTemplate {
    std::string name;
    std::string system_text;
    std::string user_template;
    std::string checksum;

    /// Substitutes every provided variable. Throws PromptError when a
    /// variable has no slot in the template or a slot stays unresolved.
    std::string render(const std::map<std::string, std::string>& vars) const;
};

class PromptLibrary {
  public:
    static PromptLibrary load_dir(const std::filesystem::path& dir);
    static std::filesystem::path default_dir();

    const PromptTemplate& get(PromptName name) const;
    std::map<std::string, std::string> checksums() const;

  private:
    std::map<std::string, PromptTemplate> templates_;
};

/// Ontology rendered for prompt embedding: field semantics plus both
/// type inventories.
std::string render_ontology_block(const OntologyVocab& vocab);

/// One line per edge: "[i] sub -- rel (rel_type) --> obj".
std::string render_edges_indexed(const KnowledgeGraph& graph);

}  // namespace tracekg
