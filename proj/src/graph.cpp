#include "tracekg/graph.hpp"

#include <algorithm>
#include <set>

namespace tracekg {

using nlohmann::json;

std::string to_string(Source source) {
    switch (source) {
        case Source::Grid: return "GRID";
        case Source::Casie: return "CASIE";
        case Source::CtiNexus: return "CTINexus";
        case Source::MalKg: return "MalKG";
        case Source::SecureNlp: return "SecureNLP";
        case Source::Custom: return "custom";
    }
    return "custom";
}

Source source_from_string(std::string_view label) {
    if (label == "GRID") return Source::Grid;
    if (label == "CASIE") return Source::Casie;
    if (label == "CTINexus") return Source::CtiNexus;
    if (label == "MalKG") return Source::MalKg;
    if (label == "SecureNLP") return Source::SecureNlp;
    return Source::Custom;
}

Article Article::make(std::string id, Source source, std::string text) {
    if (id.empty()) throw MalformedDocument("article id must be non-empty");
    Article a;
    a.id = std::move(id);
    a.source = source;
    a.text = std::move(text);
    a.token_count = count_tokens(a.text);
    return a;
}

KnowledgeGraph::KnowledgeGraph(std::vector<Entity> entities, std::vector<Relation> relations)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
    std::sort(entities_.begin(), entities_.end(),
              [](const Entity& a, const Entity& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < entities_.size(); ++i) {
        if (entities_[i].name == entities_[i - 1].name) {
            throw DuplicateEntity("duplicate entity name: " + entities_[i].name);
        }
    }
    for (const Entity& e : entities_) {
        if (e.name.empty()) throw MalformedDocument("entity name must be non-empty");
    }
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        const Relation& r = relations_[i];
        if (!find_entity(r.sub)) {
            throw DanglingEndpoint("relation " + std::to_string(i) + " subject '" + r.sub +
                                   "' does not name an entity");
        }
        if (!find_entity(r.obj)) {
            throw DanglingEndpoint("relation " + std::to_string(i) + " object '" + r.obj +
                                   "' does not name an entity");
        }
        if (r.raw_text_start && r.raw_text_end && *r.raw_text_start >= *r.raw_text_end) {
            throw MalformedDocument("relation " + std::to_string(i) +
                                    ": raw_text_start must be < raw_text_end");
        }
    }
}

const Entity* KnowledgeGraph::find_entity(std::string_view name) const {
    auto it = std::lower_bound(entities_.begin(), entities_.end(), name,
                               [](const Entity& e, std::string_view n) { return e.name < n; });
    if (it == entities_.end() || it->name != name) return nullptr;
    return &*it;
}

namespace {

std::string require_string(const json& obj, const char* key, const char* ctx) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw MalformedDocument(std::string(ctx) + ": missing string field '" + key + "'");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, const char* ctx) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw MalformedDocument(std::string(ctx) + ": field '" + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<std::size_t> optional_offset(const json& obj, const char* key, const char* ctx) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw MalformedDocument(std::string(ctx) + ": field '" + key +
                                "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(it->get<long long>());
}

Entity entity_from_json(const json& obj) {
    if (!obj.is_object()) throw MalformedDocument("entity must be an object");
    Entity e;
    e.name = require_string(obj, "name", "entity");
    e.type = obj.value("type", std::string("other"));
    e.parent_entity = optional_string(obj, "parent_entity", "entity");
    if (auto it = obj.find("alias"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) throw MalformedDocument("entity alias must be an array");
        for (const auto& a : *it) {
            if (!a.is_string()) throw MalformedDocument("entity alias entries must be strings");
            std::string alias = a.get<std::string>();
            if (std::find(e.alias.begin(), e.alias.end(), alias) == e.alias.end()) {
                e.alias.push_back(std::move(alias));
            }
        }
    }
    return e;
}

Relation relation_from_json(const json& obj) {
    if (!obj.is_object()) throw MalformedDocument("relation must be an object");
    Relation r;
    r.sub = require_string(obj, "sub", "relation");
    r.rel = require_string(obj, "rel", "relation");
    r.rel_type = obj.value("rel_type", std::string("other"));
    r.obj = require_string(obj, "obj", "relation");
    r.raw_sub_name = optional_string(obj, "raw_sub_name", "relation");
    r.raw_obj_name = optional_string(obj, "raw_obj_name", "relation");
    r.raw_text_start = optional_offset(obj, "raw_text_start", "relation");
    r.raw_text_end = optional_offset(obj, "raw_text_end", "relation");
    return r;
}

}  // namespace

KnowledgeGraph graph_from_json(const json& doc) {
    if (!doc.is_object()) throw MalformedDocument("graph document must be a JSON object");
    auto ents = doc.find("entities");
    auto rels = doc.find("relations");
    if (ents == doc.end() || !ents->is_array() || rels == doc.end() || !rels->is_array()) {
        throw MalformedDocument("graph document needs 'entities' and 'relations' arrays");
    }
    std::vector<Entity> entities;
    entities.reserve(ents->size());
    for (const auto& e : *ents) entities.push_back(entity_from_json(e));
    std::vector<Relation> relations;
    relations.reserve(rels->size());
    for (const auto& r : *rels) relations.push_back(relation_from_json(r));
    return KnowledgeGraph(std::move(entities), std::move(relations));
}

KnowledgeGraph parse_graph(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("not a JSON document: ") + e.what());
    }
    return graph_from_json(doc);
}

json graph_to_json(const KnowledgeGraph& graph) {
    json ents = json::array();
    for (const Entity& e : graph.entities()) {
        json obj;
        obj["name"] = e.name;
        obj["type"] = e.type;
        if (!e.alias.empty()) obj["alias"] = e.alias;
        if (e.parent_entity) obj["parent_entity"] = *e.parent_entity;
        ents.push_back(std::move(obj));
    }
    json rels = json::array();
    for (const Relation& r : graph.relations()) {
        json obj;
        obj["sub"] = r.sub;
        obj["rel"] = r.rel;
        obj["rel_type"] = r.rel_type;
        obj["obj"] = r.obj;
        if (r.raw_sub_name) obj["raw_sub_name"] = *r.raw_sub_name;
        if (r.raw_obj_name) obj["raw_obj_name"] = *r.raw_obj_name;
        if (r.raw_text_start) obj["raw_text_start"] = *r.raw_text_start;
        if (r.raw_text_end) obj["raw_text_end"] = *r.raw_text_end;
        rels.push_back(std::move(obj));
    }
    json out;
    out["entities"] = std::move(ents);
    out["relations"] = std::move(rels);
    return out;
}

std::string serialize_graph(const KnowledgeGraph& graph) { return graph_to_json(graph).dump(); }

json article_to_json(const Article& article) {
    json row;
    row["id"] = article.id;
    row["source"] = to_string(article.source);
    row["text"] = article.text;
    return row;
}

Article article_from_json(const json& row) {
    if (!row.is_object()) throw MalformedDocument("article row must be a JSON object");
    std::string id = require_string(row, "id", "article");
    std::string source = row.value("source", std::string("custom"));
    std::string text = require_string(row, "text", "article");
    return Article::make(std::move(id), source_from_string(source), std::move(text));
}

json pair_to_json(const AlignmentPair& pair) {
    json row = article_to_json(pair.article);
    row["graph"] = graph_to_json(pair.graph);
    return row;
}

AlignmentPair pair_from_json(const json& row) {
    AlignmentPair pair;
    pair.article = article_from_json(row);
    auto it = row.find("graph");
    if (it == row.end()) throw MalformedDocument("aligned row needs a 'graph' field");
    pair.graph = graph_from_json(*it);
    return pair;
}

}  // namespace tracekg
