#include "tracekg/ontology.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "tracekg/checksum.hpp"
#include "tracekg/jsonl.hpp"

namespace tracekg {

using nlohmann::json;

namespace {

constexpr const char* kVocabVersion = "onto-v1";

const std::set<std::string>& builtin_entity_types() {
    static const std::set<std::string> types = {
        "user-account",
        "identity",
        "threat-actor-or-intrusion-set",
        "campaign",
        "malware",
        "hacker-tool",
        "general-software",
        "security-product",
        "detailed-part-of-malware-or-hackertool",
        "detailed-part-of-general-software",
        "attack-pattern",
        "vulnerability",
        "file",
        "process",
        "windows-registry-key",
        "course-of-action",
        "url",
        "domain-name",
        "ipv4-addr",
        "ipv6-addr",
        "network-traffic",
        "infrastructure",
        "email-address",
        "mac-address",
        "indicator",
        "malware-analysis-document-or-publication-or-conference",
        "credential-value",
        "x509-certificate",
        "location",
        "abstract-concept",
        "generic-noun",
        "other",
        "noise",
    };
    return types;
}

const std::set<std::string>& builtin_relation_types() {
    static const std::set<std::string> types = {
        "exploits",
        "bypasses",
        "malicious-investigates-track-detects",
        "impersonates",
        "targets",
        "compromises",
        "leads-to",
        "drops",
        "downloads",
        "executes",
        "delivers",
        "beacons-to",
        "exfiltrate-to",
        "leaks",
        "communicates-with",
        "resolves-to",
        "hosts",
        "provides",
        "authored-by",
        "owns",
        "controls",
        "attributed-to",
        "affiliated-with",
        "cooperates-with",
        "is-part-of",
        "consists-of",
        "has",
        "depends-on",
        "creates-or-generates",
        "modifies-or-removes-or-replaces",
        "uses",
        "variant-of",
        "derived-from",
        "alias-of",
        "compares-to",
        "categorized-as",
        "located-at",
        "originates-from",
        "indicates",
        "mitigates",
        "based-on",
        "research-describes-analysis-of-characterizes-detects",
        "negation",
        "other",
    };
    return types;
}

}  // namespace

OntologyVocab::OntologyVocab(std::string version, std::set<std::string> entity_types,
                             std::set<std::string> relation_types)
    : version_(std::move(version)),
      entity_types_(std::move(entity_types)),
      relation_types_(std::move(relation_types)) {
    if (entity_types_.size() != 33) {
        throw std::runtime_error("ontology vocab must define exactly 33 entity types, got " +
                                 std::to_string(entity_types_.size()));
    }
    if (relation_types_.size() != 44) {
        throw std::runtime_error("ontology vocab must define exactly 44 relation types, got " +
                                 std::to_string(relation_types_.size()));
    }
}

const OntologyVocab& OntologyVocab::builtin() {
    static const OntologyVocab vocab(kVocabVersion, builtin_entity_types(),
                                     builtin_relation_types());
    return vocab;
}

OntologyVocab OntologyVocab::load_file(const std::filesystem::path& path) {
    json doc = json::parse(read_text_file(path));
    std::set<std::string> ents;
    std::set<std::string> rels;
    for (const auto& t : doc.at("entity_types")) ents.insert(t.get<std::string>());
    for (const auto& t : doc.at("relation_types")) rels.insert(t.get<std::string>());
    return OntologyVocab(doc.value("version", std::string(kVocabVersion)), std::move(ents),
                         std::move(rels));
}

bool OntologyVocab::has_entity_type(std::string_view type) const {
    return entity_types_.count(std::string(type)) > 0;
}

bool OntologyVocab::has_relation_type(std::string_view type) const {
    return relation_types_.count(std::string(type)) > 0;
}

std::string OntologyVocab::checksum() const {
    json doc;
    doc["version"] = version_;
    doc["entity_types"] = entity_types_;
    doc["relation_types"] = relation_types_;
    return checksum_hex(doc.dump());
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::UnknownEntityType: return "unknown-entity-type";
        case ViolationKind::UnknownRelationType: return "unknown-relation-type";
        case ViolationKind::DanglingParent: return "dangling-parent";
        case ViolationKind::SelfAlias: return "self-alias";
        case ViolationKind::IsolatedEntity: return "isolated-entity";
    }
    return "unknown";
}

std::vector<Violation> validate_graph(const KnowledgeGraph& graph, const OntologyVocab& vocab) {
    std::vector<Violation> out;
    for (const Entity& e : graph.entities()) {
        if (!vocab.has_entity_type(e.type)) {
            out.push_back({ViolationKind::UnknownEntityType, e.name,
                           "entity type '" + e.type + "' is not in the ontology"});
        }
        if (e.parent_entity && !graph.find_entity(*e.parent_entity)) {
            out.push_back({ViolationKind::DanglingParent, e.name,
                           "parent_entity '" + *e.parent_entity + "' does not name an entity"});
        }
        for (const std::string& a : e.alias) {
            if (a == e.name) {
                out.push_back({ViolationKind::SelfAlias, e.name, "alias equals the entity name"});
            }
        }
    }
    for (std::size_t i = 0; i < graph.relations().size(); ++i) {
        const Relation& r = graph.relations()[i];
        if (!vocab.has_relation_type(r.rel_type)) {
            out.push_back({ViolationKind::UnknownRelationType, std::to_string(i),
                           "relation type '" + r.rel_type + "' is not in the ontology"});
        }
    }
    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.subject != b.subject) return a.subject < b.subject;
        return a.detail < b.detail;
    });
    return out;
}

RecheckResult connectivity_recheck(const KnowledgeGraph& graph) {
    std::set<std::string> kept;
    for (const Entity& e : graph.entities()) kept.insert(e.name);

    std::set<std::string> in_relation;
    for (const Relation& r : graph.relations()) {
        in_relation.insert(r.sub);
        in_relation.insert(r.obj);
    }

    // Parent/alias references count as support only while the referencing
    // entity itself survives, so removal iterates to a fixpoint.
    bool changed = true;
    while (changed) {
        changed = false;
        std::set<std::string> referenced = in_relation;
        for (const Entity& e : graph.entities()) {
            if (!kept.count(e.name)) continue;
            if (e.parent_entity) referenced.insert(*e.parent_entity);
            for (const std::string& a : e.alias) referenced.insert(a);
        }
        for (auto it = kept.begin(); it != kept.end();) {
            if (!referenced.count(*it)) {
                it = kept.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }

    RecheckResult result;
    std::vector<Entity> entities;
    for (const Entity& e : graph.entities()) {
        if (kept.count(e.name)) {
            entities.push_back(e);
        } else {
            result.removed.push_back(e.name);
        }
    }
    result.graph = KnowledgeGraph(std::move(entities), graph.relations());
    return result;
}

}  // namespace tracekg
