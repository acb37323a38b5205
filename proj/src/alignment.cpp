#include "tracekg/alignment.hpp"

#include <sstream>

namespace tracekg {

std::string to_string(AnchorField field) {
    switch (field) {
        case AnchorField::SubName: return "sub_name";
        case AnchorField::ObjName: return "obj_name";
        case AnchorField::Span: return "span";
    }
    return "span";
}

std::string to_string(AlignStage stage) {
    switch (stage) {
        case AlignStage::Extract: return "extract";
        case AlignStage::Verify: return "verify";
        case AlignStage::Revise: return "revise";
        case AlignStage::Protect: return "protect";
    }
    return "extract";
}

std::string describe(const AnchorViolation& violation) {
    std::ostringstream out;
    out << "edge " << violation.edge_index << ": " << to_string(violation.field) << " expected '"
        << violation.expected << "'";
    if (violation.found) {
        out << ", found '" << *violation.found << "'";
    } else {
        out << ", not found";
    }
    return out.str();
}

namespace {

std::string describe_all(const std::vector<AnchorViolation>& violations) {
    std::string out;
    for (const AnchorViolation& v : violations) {
        out += describe(v);
        out += '\n';
    }
    return out;
}

std::string span_text_of(const Relation& r) {
    std::string start = r.raw_text_start ? std::to_string(*r.raw_text_start) : "absent";
    std::string end = r.raw_text_end ? std::to_string(*r.raw_text_end) : "absent";
    return "[" + start + ", " + end + ")";
}

}  // namespace

std::vector<AnchorViolation> verify_anchors(const Article& article, const KnowledgeGraph& graph) {
    std::vector<AnchorViolation> out;
    const std::size_t text_len = utf8_length(article.text);
    for (std::size_t i = 0; i < graph.relations().size(); ++i) {
        const Relation& r = graph.relations()[i];
        if (!r.has_anchor_fields()) continue;

        const bool span_ok = r.raw_text_start && r.raw_text_end &&
                             *r.raw_text_start < *r.raw_text_end && *r.raw_text_end <= text_len;
        std::optional<std::string> window;
        if (span_ok) window = utf8_substr(article.text, *r.raw_text_start, *r.raw_text_end);
        if (!span_ok || !window) {
            out.push_back({i, AnchorField::Span, "0 <= raw_text_start < raw_text_end <= text length",
                           span_text_of(r)});
        }

        auto check_name = [&](const std::optional<std::string>& raw, AnchorField field) {
            if (!raw) {
                out.push_back({i, field, "verbatim anchor mention", std::nullopt});
                return;
            }
            if (window && window->find(*raw) == std::string::npos) {
                out.push_back({i, field, *raw, std::nullopt});
            }
        };
        check_name(r.raw_sub_name, AnchorField::SubName);
        check_name(r.raw_obj_name, AnchorField::ObjName);
    }
    return out;
}

std::vector<AnchorViolation> check_protected_spans(const Article& /*original*/,
                                                   const Article& revised,
                                                   const KnowledgeGraph& graph) {
    std::vector<AnchorViolation> out;
    for (std::size_t i = 0; i < graph.relations().size(); ++i) {
        const Relation& r = graph.relations()[i];
        if (!r.has_anchor_fields()) continue;
        auto check_name = [&](const std::optional<std::string>& raw, AnchorField field) {
            if (!raw) return;
            if (revised.text.find(*raw) == std::string::npos) {
                out.push_back({i, field, *raw, std::nullopt});
            }
        };
        check_name(r.raw_sub_name, AnchorField::SubName);
        check_name(r.raw_obj_name, AnchorField::ObjName);
    }
    return out;
}

KnowledgeGraph recompute_anchors(const Article& article, const KnowledgeGraph& graph) {
    std::vector<Relation> relations = graph.relations();
    for (Relation& r : relations) {
        if (!r.raw_sub_name || !r.raw_obj_name) continue;
        std::size_t sub_byte = article.text.find(*r.raw_sub_name);
        std::size_t obj_byte = article.text.find(*r.raw_obj_name);
        if (sub_byte == std::string::npos || obj_byte == std::string::npos) {
            r.raw_sub_name.reset();
            r.raw_obj_name.reset();
            r.raw_text_start.reset();
            r.raw_text_end.reset();
            continue;
        }
        std::size_t sub_start = byte_to_scalar_offset(article.text, sub_byte);
        std::size_t obj_start = byte_to_scalar_offset(article.text, obj_byte);
        std::size_t sub_end = sub_start + utf8_length(*r.raw_sub_name);
        std::size_t obj_end = obj_start + utf8_length(*r.raw_obj_name);
        r.raw_text_start = std::min(sub_start, obj_start);
        r.raw_text_end = std::max(sub_end, obj_end);
    }
    return KnowledgeGraph(graph.entities(), std::move(relations));
}

KnowledgeGraph extract_traceable(const Article& article, const LlmContext& ctx) {
    const PromptTemplate& tmpl = ctx.prompts.get(PromptName::Trace);
    const std::string user = tmpl.render({
        {"article", article.text},
        {"ontology", render_ontology_block(ctx.vocab)},
    });

    auto request = [&](const std::string& user_text, const std::string& id_suffix) {
        ChatRequest req;
        req.model = ctx.options.model;
        req.system_text = tmpl.system_text;
        req.user_text = user_text;
        req.temperature = ctx.options.extract_temperature;
        req.max_output_tokens = ctx.options.extract_max_tokens;
        req.request_id = article.id + id_suffix;
        return req;
    };

    auto parse = [&](const std::string& response) {
        try {
            return parse_graph(extract_json_payload(response));
        } catch (const GraphError& e) {
            throw UnparseableResponse("traceable extraction for " + article.id + ": " + e.what());
        }
    };

    KnowledgeGraph graph = parse(ctx.gateway.send(request(user, ":trace")));
    std::vector<AnchorViolation> violations = verify_anchors(article, graph);
    if (violations.empty()) return graph;

    const std::string repair_user = user +
        "\n\nYour previous output failed the anchor check:\n" + describe_all(violations) +
        "Regenerate the full JSON object with corrected anchors.";
    graph = parse(ctx.gateway.send(request(repair_user, ":trace-repair")));
    violations = verify_anchors(article, graph);
    if (!violations.empty()) {
        throw AnchorFailure("anchors failed after repair retry for " + article.id + ":\n" +
                            describe_all(violations), std::move(violations));
    }
    return graph;
}

Article revise_article(const Article& article, const KnowledgeGraph& graph, const LlmContext& ctx) {
    const PromptTemplate& tmpl = ctx.prompts.get(PromptName::Revise);
    const std::string user = tmpl.render({
        {"article", article.text},
        {"graph", serialize_graph(graph)},
    });

    auto request = [&](const std::string& user_text, const std::string& id_suffix) {
        ChatRequest req;
        req.model = ctx.options.model;
        req.system_text = tmpl.system_text;
        req.user_text = user_text;
        req.temperature = ctx.options.extract_temperature;
        req.max_output_tokens = ctx.options.extract_max_tokens;
        req.request_id = article.id + id_suffix;
        return req;
    };

    Article revised = Article::make(article.id, article.source,
                                    ctx.gateway.send(request(user, ":revise")));
    std::vector<AnchorViolation> violations = check_protected_spans(article, revised, graph);
    if (violations.empty()) return revised;

    const std::string retry_user = user +
        "\n\nYour previous revision dropped protected anchor strings:\n" +
        describe_all(violations) + "Revise again keeping every anchor string verbatim.";
    revised = Article::make(article.id, article.source,
                            ctx.gateway.send(request(retry_user, ":revise-retry")));
    violations = check_protected_spans(article, revised, graph);
    if (!violations.empty()) {
        throw ProtectedSpanLost("revision lost protected anchors for " + article.id + ":\n" +
                                describe_all(violations), std::move(violations));
    }
    return revised;
}

AlignmentPair build_alignment(const Article& article, const LlmContext& ctx) {
    KnowledgeGraph graph;
    try {
        graph = extract_traceable(article, ctx);
    } catch (const AnchorFailure& e) {
        throw AlignmentError(AlignStage::Verify, e.what());
    } catch (const GatewayError& e) {
        throw AlignmentError(AlignStage::Extract, e.what(), /*gateway_failure=*/true);
    } catch (const std::exception& e) {
        throw AlignmentError(AlignStage::Extract, e.what());
    }

    Article revised;
    try {
        revised = revise_article(article, graph, ctx);
    } catch (const ProtectedSpanLost& e) {
        throw AlignmentError(AlignStage::Protect, e.what());
    } catch (const GatewayError& e) {
        throw AlignmentError(AlignStage::Revise, e.what(), /*gateway_failure=*/true);
    } catch (const std::exception& e) {
        throw AlignmentError(AlignStage::Revise, e.what());
    }

    return AlignmentPair{revised, recompute_anchors(revised, graph)};
}

}  // namespace tracekg
