#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace httplib {
class Server;
}

#include "tracekg/alignment.hpp"
#include "tracekg/complexity.hpp"
#include "tracekg/evaluator.hpp"
#include "tracekg/llm_context.hpp"
#include "tracekg/reward.hpp"
#include "tracekg/taskbank.hpp"

namespace tracekg {

struct RejectRow {
    std::string id;
    std::string stage;
    std::string reason;
};

nlohmann::json reject_to_json(const RejectRow& row);

// ---- align ----

struct AlignOutcome {
    std::vector<AlignmentPair> pairs;  // input order
    std::vector<RejectRow> rejects;
};

/// Runs build_alignment over the corpus, up to `parallel` articles at a time.
/// Data failures become reject rows; gateway failures abort the run.
AlignOutcome align_corpus(const std::vector<Article>& articles, const LlmContext& ctx,
                          int parallel);

std::vector<nlohmann::json> pairs_to_rows(const std::vector<AlignmentPair>& pairs);
std::vector<AlignmentPair> pairs_from_rows(const std::vector<nlohmann::json>& rows);

// ---- task bank ----

struct BankOutcome {
    std::vector<TaskBank> banks;
    std::vector<RejectRow> rejects;
};

BankOutcome build_bank_corpus(const std::vector<AlignmentPair>& pairs, const LlmContext& ctx,
                              std::size_t max_choice, int parallel);

/// Bank file rows: a header row then choice/regex rows with task ids.
std::vector<nlohmann::json> bank_to_rows(const std::vector<TaskBank>& banks,
                                         const LlmContext& ctx);

/// task_id -> scoreable task, parsed back from bank rows.
std::map<std::string, RewardTask> tasks_from_rows(const std::vector<nlohmann::json>& rows);

// ---- extract ----

struct Prediction {
    std::string id;
    Source source = Source::Custom;
    KnowledgeGraph graph;
};

struct ExtractOutcome {
    std::vector<Prediction> predictions;
    std::vector<RejectRow> rejects;
};

/// Fixed two-prompt inference (candidates then finalize) with the
/// connectivity recheck applied; `single_prompt` uses the merged template.
ExtractOutcome extract_corpus(const std::vector<Article>& articles, const LlmContext& ctx,
                              bool single_prompt, int parallel);

// ---- evaluate ----

struct ArticleEvaluation {
    std::string id;
    Source source = Source::Custom;
    ArticleMetrics metrics;
    std::vector<AuditItem> precision_items;
    std::vector<AuditItem> recall_items;
};

struct EvaluationRun {
    std::string label;
    BenchmarkReport report;
    std::vector<ArticleEvaluation> articles;
    std::vector<RejectRow> failures;
};

/// Judges predictions against filtered ground truth. Articles whose audits
/// fail to parse (after one retry) land in failures and never in aggregates.
EvaluationRun evaluate_corpus(const std::vector<Prediction>& predictions,
                              const std::vector<AlignmentPair>& ground_truth,
                              const LlmContext& ctx, std::size_t min_edges, int parallel,
                              const std::string& label);

nlohmann::json evaluation_to_json(const EvaluationRun& run);
EvaluationRun evaluation_from_json(const nlohmann::json& doc);

/// Fixed-width per-source table with the Avg row, for terminal display.
std::string render_report_table(const EvaluationRun& run);

// ---- scores ----

nlohmann::json scores_to_json(const std::vector<ComplexityScore>& scores);
std::vector<ComplexityScore> scores_from_json(const nlohmann::json& doc);

// ---- reward server ----

/// POST /score with {"task_id","text"} -> reward breakdown JSON; unknown
/// task_id answers 404, malformed requests 400. Stateless.
void attach_reward_routes(httplib::Server& server,
                          std::shared_ptr<const std::map<std::string, RewardTask>> tasks);

}  // namespace tracekg
