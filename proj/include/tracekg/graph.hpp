#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tracekg/textutil.hpp"

namespace tracekg {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedDocument : GraphError {
    using GraphError::GraphError;
};
struct DanglingEndpoint : GraphError {
    using GraphError::GraphError;
};
struct DuplicateEntity : GraphError {
    using GraphError::GraphError;
};

enum class Source { Grid, Casie, CtiNexus, MalKg, SecureNlp, Custom };

std::string to_string(Source source);
/// Known labels map exactly; anything else is Custom.
Source source_from_string(std::string_view label);

/// A CTI document. token_count is derived from text on construction.
struct Article {
    std::string id;
    Source source = Source::Custom;
    std::string text;
    std::size_t token_count = 0;

    static Article make(std::string id, Source source, std::string text);

    bool operator==(const Article&) const = default;
};

struct Entity {
    std::string name;
    std::string type;
    std::vector<std::string> alias;
    std::optional<std::string> parent_entity;

    bool operator==(const Entity&) const = default;
};

/// One directed edge. Anchor fields tie the edge to a verbatim span of the
/// owning article; offsets are Unicode scalar-value offsets, never bytes.
struct Relation {
    std::string sub;
    std::string rel;
    std::string rel_type;
    std::string obj;
    std::optional<std::string> raw_sub_name;
    std::optional<std::string> raw_obj_name;
    std::optional<std::size_t> raw_text_start;
    std::optional<std::size_t> raw_text_end;

    bool has_anchor_fields() const {
        return raw_sub_name || raw_obj_name || raw_text_start || raw_text_end;
    }

    bool operator==(const Relation&) const = default;
};

/// Entities plus ordered relations. Entity names are unique and every
/// relation endpoint resolves. Entities are kept sorted by name; relation
/// order is stable and an edge's identity is its list position.
class KnowledgeGraph {
  public:
    KnowledgeGraph() = default;
    KnowledgeGraph(std::vector<Entity> entities, std::vector<Relation> relations);

    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Relation>& relations() const { return relations_; }
    const Entity* find_entity(std::string_view name) const;

    bool operator==(const KnowledgeGraph&) const = default;

  private:
    std::vector<Entity> entities_;
    std::vector<Relation> relations_;
};

/// A revised article paired with the graph its security content aligns to.
struct AlignmentPair {
    Article article;
    KnowledgeGraph graph;

    bool operator==(const AlignmentPair&) const = default;
};

KnowledgeGraph parse_graph(const std::string& text);
KnowledgeGraph graph_from_json(const nlohmann::json& doc);

/// Canonical JSON: keys sorted, entities ordered by name, relations in stored
/// order, defaults omitted, no insignificant whitespace.
std::string serialize_graph(const KnowledgeGraph& graph);
nlohmann::json graph_to_json(const KnowledgeGraph& graph);

nlohmann::json article_to_json(const Article& article);
Article article_from_json(const nlohmann::json& row);

nlohmann::json pair_to_json(const AlignmentPair& pair);
AlignmentPair pair_from_json(const nlohmann::json& row);

}  // namespace tracekg
