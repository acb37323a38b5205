#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tracekg/graph.hpp"

namespace tracekg {

/// Controlled vocabularies for entity and relation types. Immutable after
/// load; exactly 33 entity types and 44 relation types, "other" included.
class OntologyVocab {
  public:
    static const OntologyVocab& builtin();
    static OntologyVocab load_file(const std::filesystem::path& path);

    const std::set<std::string>& entity_types() const { return entity_types_; }
    const std::set<std::string>& relation_types() const { return relation_types_; }
    bool has_entity_type(std::string_view type) const;
    bool has_relation_type(std::string_view type) const;
    const std::string& version() const { return version_; }
    /// Checksum over the canonical vocabulary encoding; recorded in manifests.
    std::string checksum() const;

  private:
    OntologyVocab(std::string version, std::set<std::string> entity_types,
                  std::set<std::string> relation_types);

    std::string version_;
    std::set<std::string> entity_types_;
    std::set<std::string> relation_types_;
};

enum class ViolationKind {
    UnknownEntityType,
    UnknownRelationType,
    DanglingParent,
    SelfAlias,
    IsolatedEntity,
};

std::string to_string(ViolationKind kind);

/// One ontology breach. `subject` is an entity name, except for
/// UnknownRelationType where it is the edge index.
struct Violation {
    ViolationKind kind;
    std::string subject;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

/// All vocabulary/parent/alias breaches, sorted by kind then subject.
/// Violations are data, not errors; an empty result means the graph is clean.
std::vector<Violation> validate_graph(const KnowledgeGraph& graph, const OntologyVocab& vocab);

struct RecheckResult {
    KnowledgeGraph graph;
    std::vector<std::string> removed;
};

/// Drops entities that neither participate in a relation nor are referenced
/// by a remaining entity's parent_entity or alias. Relations are untouched.
RecheckResult connectivity_recheck(const KnowledgeGraph& graph);

}  // namespace tracekg
