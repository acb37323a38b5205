#include "tracekg/evaluator.hpp"

#include <algorithm>

#include <json.hpp>

#include "tracekg/textutil.hpp"

namespace tracekg {

using nlohmann::json;

std::string to_string(AuditKind kind) {
    return kind == AuditKind::Precision ? "precision" : "recall";
}

namespace {

std::string render_judge_prompt(PromptName name, const Article& article,
                                const KnowledgeGraph& predicted,
                                const KnowledgeGraph& ground_truth,
                                const PromptLibrary& prompts) {
    return prompts.get(name).render({
        {"article", article.text},
        {"predicted_edges", render_edges_indexed(predicted)},
        {"ground_truth_edges", render_edges_indexed(ground_truth)},
    });
}

std::string evidence_to_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

}  // namespace

std::string build_precision_prompt(const Article& article, const KnowledgeGraph& predicted,
                                   const KnowledgeGraph& ground_truth,
                                   const PromptLibrary& prompts) {
    return render_judge_prompt(PromptName::JudgePrecision, article, predicted, ground_truth,
                               prompts);
}

std::string build_recall_prompt(const Article& article, const KnowledgeGraph& predicted,
                                const KnowledgeGraph& ground_truth, const PromptLibrary& prompts) {
    return render_judge_prompt(PromptName::JudgeRecall, article, predicted, ground_truth, prompts);
}

std::vector<AuditItem> parse_verdicts(const std::string& response, std::size_t expected_count,
                                      AuditKind kind) {
    if (expected_count < 1) throw std::invalid_argument("expected_count must be >= 1");
    json doc;
    try {
        doc = json::parse(extract_json_payload(response));
    } catch (const json::exception& e) {
        throw UnparseableResponse(std::string("verdict list is not JSON: ") + e.what());
    }
    if (!doc.is_array()) throw UnparseableResponse("verdict payload must be a JSON list");

    std::vector<AuditItem> items;
    std::vector<bool> seen(expected_count, false);
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("index") || !entry.contains("verdict") ||
            !entry["index"].is_number_integer() || !entry["verdict"].is_boolean()) {
            throw UnparseableResponse("verdict items need integer 'index' and boolean 'verdict'");
        }
        long long raw_index = entry["index"].get<long long>();
        if (raw_index < 0 || static_cast<std::size_t>(raw_index) >= expected_count) {
            throw CountMismatch("verdict index " + std::to_string(raw_index) +
                                " outside expected range 0.." + std::to_string(expected_count - 1));
        }
        auto index = static_cast<std::size_t>(raw_index);
        if (seen[index]) {
            throw DuplicateIndex("verdict index " + std::to_string(index) + " appears twice");
        }
        seen[index] = true;
        AuditItem item;
        item.kind = kind;
        item.edge_index = index;
        item.verdict = entry["verdict"].get<bool>();
        if (entry.contains("evidence")) item.evidence = evidence_to_string(entry["evidence"]);
        items.push_back(std::move(item));
    }
    for (std::size_t i = 0; i < expected_count; ++i) {
        if (!seen[i]) {
            throw MissingIndex("verdict for index " + std::to_string(i) + " is missing");
        }
    }
    std::sort(items.begin(), items.end(),
              [](const AuditItem& a, const AuditItem& b) { return a.edge_index < b.edge_index; });
    return items;
}

ArticleMetrics article_metrics(std::span<const AuditItem> precision_items,
                               std::span<const AuditItem> recall_items) {
    auto true_fraction = [](std::span<const AuditItem> items) {
        if (items.empty()) return 0.0;
        std::size_t yes = 0;
        for (const AuditItem& item : items) {
            if (item.verdict) ++yes;
        }
        return static_cast<double>(yes) / static_cast<double>(items.size());
    };
    ArticleMetrics m;
    m.precision = true_fraction(precision_items);
    m.recall = true_fraction(recall_items);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

BenchmarkReport aggregate(const std::map<Source, std::vector<ArticleMetrics>>& per_article) {
    BenchmarkReport report;
    for (const auto& [source, articles] : per_article) {
        if (articles.empty()) {
            throw EmptySource("source " + to_string(source) + " has no articles");
        }
        SourceMetrics sm;
        sm.source = source;
        sm.article_count = articles.size();
        for (const ArticleMetrics& a : articles) {
            sm.precision += a.precision;
            sm.recall += a.recall;
            sm.f1 += a.f1;
        }
        const auto n = static_cast<double>(articles.size());
        sm.precision /= n;
        sm.recall /= n;
        sm.f1 /= n;
        report.per_source.push_back(sm);
    }
    std::sort(report.per_source.begin(), report.per_source.end(),
              [](const SourceMetrics& a, const SourceMetrics& b) {
                  return to_string(a.source) < to_string(b.source);
              });
    if (!report.per_source.empty()) {
        const auto n = static_cast<double>(report.per_source.size());
        for (const SourceMetrics& sm : report.per_source) {
            report.avg_precision += sm.precision;
            report.avg_recall += sm.recall;
            report.avg_f1 += sm.f1;
        }
        report.avg_precision /= n;
        report.avg_recall /= n;
        report.avg_f1 /= n;
    }
    return report;
}

double rq3_score(const BenchmarkReport& report) {
    return (report.avg_precision + report.avg_recall) / 2.0;
}

std::vector<AlignmentPair> filter_benchmark(std::vector<AlignmentPair> pairs,
                                            std::size_t min_edges) {
    std::vector<AlignmentPair> kept;
    kept.reserve(pairs.size());
    for (AlignmentPair& pair : pairs) {
        if (pair.graph.relations().size() >= min_edges) kept.push_back(std::move(pair));
    }
    return kept;
}

AgreementRates agreement(std::span<const CalibrationItem> items) {
    std::size_t p_total = 0, p_agree = 0, r_total = 0, r_agree = 0;
    for (const CalibrationItem& item : items) {
        const bool agree = item.llm_verdict == item.human_verdict;
        if (item.kind == AuditKind::Precision) {
            ++p_total;
            if (agree) ++p_agree;
        } else {
            ++r_total;
            if (agree) ++r_agree;
        }
    }
    if (p_total == 0 || r_total == 0) {
        throw EmptyInput("agreement needs at least one item of each kind");
    }
    AgreementRates rates;
    rates.precision = static_cast<double>(p_agree) / static_cast<double>(p_total);
    rates.recall = static_cast<double>(r_agree) / static_cast<double>(r_total);
    rates.overall = static_cast<double>(p_agree + r_agree) / static_cast<double>(p_total + r_total);
    return rates;
}

}  // namespace tracekg
