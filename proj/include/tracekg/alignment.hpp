#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracekg/graph.hpp"
#include "tracekg/llm_context.hpp"

namespace tracekg {

enum class AnchorField { SubName, ObjName, Span };

std::string to_string(AnchorField field);

struct AnchorViolation {
    std::size_t edge_index;
    AnchorField field;
    std::string expected;
    std::optional<std::string> found;

    bool operator==(const AnchorViolation&) const = default;
};

std::string describe(const AnchorViolation& violation);

struct AnchorFailure : std::runtime_error {
    AnchorFailure(std::string msg, std::vector<AnchorViolation> v)
        : std::runtime_error(std::move(msg)), violations(std::move(v)) {}
    std::vector<AnchorViolation> violations;
};

struct ProtectedSpanLost : std::runtime_error {
    ProtectedSpanLost(std::string msg, std::vector<AnchorViolation> v)
        : std::runtime_error(std::move(msg)), violations(std::move(v)) {}
    std::vector<AnchorViolation> violations;
};

enum class AlignStage { Extract, Verify, Revise, Protect };

std::string to_string(AlignStage stage);

/// Failure of build_alignment, tagged with the pipeline stage that failed.
/// `gateway` marks failures of the LLM boundary itself rather than the data.
struct AlignmentError : std::runtime_error {
    AlignmentError(AlignStage s, const std::string& msg, bool gateway_failure = false)
        : std::runtime_error(to_string(s) + ": " + msg), stage(s), gateway(gateway_failure) {}
    AlignStage stage;
    bool gateway;
};

/// Checks every anchored relation: the span must be inside the article (scalar
/// offsets, start < end) and both raw mentions must occur verbatim within it.
/// Relations without anchor fields are skipped.
std::vector<AnchorViolation> verify_anchors(const Article& article, const KnowledgeGraph& graph);

/// After revision offsets may shift; only substring presence of the raw
/// mentions in the revised text is required.
std::vector<AnchorViolation> check_protected_spans(const Article& original, const Article& revised,
                                                   const KnowledgeGraph& graph);

/// Recomputes each anchored relation's span in `article` by first-occurrence
/// search over the raw mentions.
KnowledgeGraph recompute_anchors(const Article& article, const KnowledgeGraph& graph);

/// Traceable extraction: prompt, parse, verify anchors; one repair re-prompt
/// carrying the violation list, then AnchorFailure.
KnowledgeGraph extract_traceable(const Article& article, const LlmContext& ctx);

/// Graph-conditioned revision; the revised text must keep every anchored raw
/// mention (one retry, then ProtectedSpanLost).
Article revise_article(const Article& article, const KnowledgeGraph& graph, const LlmContext& ctx);

/// Full annotate-and-revise pipeline; failures raise AlignmentError tagged
/// with the failing stage.
AlignmentPair build_alignment(const Article& article, const LlmContext& ctx);

}  // namespace tracekg
