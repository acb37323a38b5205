#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracekg/graph.hpp"
#include "tracekg/llm_context.hpp"

namespace tracekg {

enum class AuditKind { Precision, Recall };

std::string to_string(AuditKind kind);

/// One audited edge: predicted edges for precision, ground-truth for recall.
struct AuditItem {
    AuditKind kind = AuditKind::Precision;
    std::size_t edge_index = 0;
    bool verdict = false;
    std::string evidence;

    bool operator==(const AuditItem&) const = default;
};

struct ArticleMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const ArticleMetrics&) const = default;
};

/// Arithmetic means of the source's per-article metrics (macro average).
struct SourceMetrics {
    Source source = Source::Custom;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t article_count = 0;
};

struct CalibrationItem {
    AuditKind kind = AuditKind::Precision;
    bool llm_verdict = false;
    bool human_verdict = false;
};

/// Per-source rows plus the Avg row. Avg P, R, and F1 are averaged
/// independently over sources; Avg F1 is never recomputed from Avg P/R.
struct BenchmarkReport {
    std::vector<SourceMetrics> per_source;
    double avg_precision = 0.0;
    double avg_recall = 0.0;
    double avg_f1 = 0.0;
};

struct MissingIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CountMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptySource : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string build_precision_prompt(const Article& article, const KnowledgeGraph& predicted,
                                   const KnowledgeGraph& ground_truth, const PromptLibrary& prompts);
std::string build_recall_prompt(const Article& article, const KnowledgeGraph& predicted,
                                const KnowledgeGraph& ground_truth, const PromptLibrary& prompts);

/// Parses a JSON verdict list and requires indices to form exactly
/// 0..expected_count-1; the result is sorted by index.
std::vector<AuditItem> parse_verdicts(const std::string& response, std::size_t expected_count,
                                      AuditKind kind);

/// precision = true verdicts / predicted edges, recall = true verdicts /
/// ground-truth edges. Zero predicted edges score precision 0, not 1.
ArticleMetrics article_metrics(std::span<const AuditItem> precision_items,
                               std::span<const AuditItem> recall_items);

BenchmarkReport aggregate(const std::map<Source, std::vector<ArticleMetrics>>& per_article);

/// (avg precision + avg recall) / 2.
double rq3_score(const BenchmarkReport& report);

/// Keeps pairs whose graphs have at least min_edges relations, input order
/// preserved.
std::vector<AlignmentPair> filter_benchmark(std::vector<AlignmentPair> pairs,
                                            std::size_t min_edges = 5);

struct AgreementRates {
    double precision = 0.0;
    double recall = 0.0;
    double overall = 0.0;
};

/// Fraction of items where the model verdict equals the human verdict,
/// per kind and overall.
AgreementRates agreement(std::span<const CalibrationItem> items);

}  // namespace tracekg
