#include "tracekg/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "tracekg/textutil.hpp"

namespace tracekg {

using nlohmann::json;

namespace {

// Bounded index-parallel loop; the first exception escaping fn stops the run.
void parallel_for(std::size_t n, int parallel, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(std::max(parallel, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!stop.load()) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    stop.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

json reject_to_json(const RejectRow& row) {
    return json{{"id", row.id}, {"stage", row.stage}, {"reason", row.reason}};
}

// ---- align ----

AlignOutcome align_corpus(const std::vector<Article>& articles, const LlmContext& ctx,
                          int parallel) {
    std::vector<std::optional<AlignmentPair>> pairs(articles.size());
    std::vector<std::optional<RejectRow>> rejects(articles.size());
    parallel_for(articles.size(), parallel, [&](std::size_t i) {
        try {
            pairs[i] = build_alignment(articles[i], ctx);
        } catch (const AlignmentError& e) {
            if (e.gateway) throw;
            rejects[i] = RejectRow{articles[i].id, to_string(e.stage), e.what()};
        }
    });
    AlignOutcome out;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        if (pairs[i]) out.pairs.push_back(std::move(*pairs[i]));
        if (rejects[i]) out.rejects.push_back(std::move(*rejects[i]));
    }
    return out;
}

std::vector<json> pairs_to_rows(const std::vector<AlignmentPair>& pairs) {
    std::vector<json> rows;
    rows.reserve(pairs.size());
    for (const AlignmentPair& pair : pairs) {
        json row = pair_to_json(pair);
        if (pair.graph.relations().empty()) row["flags"] = json::array({"no_relations"});
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AlignmentPair> pairs_from_rows(const std::vector<json>& rows) {
    std::vector<AlignmentPair> pairs;
    pairs.reserve(rows.size());
    for (const json& row : rows) pairs.push_back(pair_from_json(row));
    return pairs;
}

// ---- task bank ----

BankOutcome build_bank_corpus(const std::vector<AlignmentPair>& pairs, const LlmContext& ctx,
                              std::size_t max_choice, int parallel) {
    std::vector<std::optional<TaskBank>> banks(pairs.size());
    std::vector<std::optional<RejectRow>> rejects(pairs.size());
    parallel_for(pairs.size(), parallel, [&](std::size_t i) {
        const AlignmentPair& pair = pairs[i];
        if (pair.graph.relations().empty()) {
            rejects[i] = RejectRow{pair.article.id, "taskbank", "graph has no relations"};
            return;
        }
        try {
            TaskBank bank;
            bank.article_id = pair.article.id;
            bank.choices = build_choice_questions(pair, ctx, max_choice);
            bank.regex_targets = build_regex_targets(pair, ctx);
            auto violations = validate_taskbank(bank, pair);
            if (!violations.empty()) {
                std::string reason = "bank failed validation:";
                for (const auto& v : violations) {
                    reason += ' ' + to_string(v.kind) + '(' + v.subject + ')';
                }
                rejects[i] = RejectRow{pair.article.id, "taskbank", reason};
                return;
            }
            banks[i] = std::move(bank);
        } catch (const EmptyBank& e) {
            rejects[i] = RejectRow{pair.article.id, "taskbank", e.what()};
        } catch (const SelfMatchFailure& e) {
            rejects[i] = RejectRow{pair.article.id, "taskbank", e.what()};
        }
    });
    BankOutcome out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (banks[i]) out.banks.push_back(std::move(*banks[i]));
        if (rejects[i]) out.rejects.push_back(std::move(*rejects[i]));
    }
    return out;
}

std::vector<json> bank_to_rows(const std::vector<TaskBank>& banks, const LlmContext& ctx) {
    std::vector<json> rows;
    json header;
    header["kind"] = "header";
    header["format_version"] = kBankFormatVersion;
    header["normalization_version"] = kNormalizationVersion;
    header["option_separator"] = kOptionSeparator;
    auto checksums = ctx.prompts.checksums();
    header["prompt_checksums"] = json{{"choice_questions", checksums.at("choice_questions")},
                                      {"regex_targets", checksums.at("regex_targets")}};
    header["ontology_checksum"] = ctx.vocab.checksum();
    rows.push_back(std::move(header));

    for (const TaskBank& bank : banks) {
        for (std::size_t qi = 0; qi < bank.choices.size(); ++qi) {
            json row = choice_to_json(bank.choices[qi]);
            row["kind"] = "choice";
            row["task_id"] = bank.article_id + "#choice#" + std::to_string(qi);
            if (bank.complexity) row["complexity"] = *bank.complexity;
            rows.push_back(std::move(row));
        }
        for (const RegexTarget& target : bank.regex_targets) {
            json row = target_to_json(target);
            row["kind"] = "regex";
            row["task_id"] = bank.article_id + "#regex";
            if (bank.complexity) row["complexity"] = *bank.complexity;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::map<std::string, RewardTask> tasks_from_rows(const std::vector<json>& rows) {
    std::map<std::string, RewardTask> tasks;
    std::map<std::string, RegexTask> regex_tasks;
    for (const json& row : rows) {
        const std::string kind = row.value("kind", std::string());
        if (kind == "header") continue;
        if (kind == "choice") {
            tasks.emplace(row.at("task_id").get<std::string>(), choice_from_json(row));
        } else if (kind == "regex") {
            RegexTask& task = regex_tasks[row.at("task_id").get<std::string>()];
            RegexTarget target = target_from_json(row);
            task.article_id = target.article_id;
            task.targets.push_back(std::move(target));
        } else {
            throw MalformedDocument("unknown bank row kind: " + kind);
        }
    }
    for (auto& [task_id, task] : regex_tasks) {
        std::sort(task.targets.begin(), task.targets.end(),
                  [](const RegexTarget& a, const RegexTarget& b) {
                      return a.edge_index < b.edge_index;
                  });
        tasks.emplace(task_id, std::move(task));
    }
    return tasks;
}

// ---- extract ----

namespace {

KnowledgeGraph parse_response_graph(const std::string& response, const std::string& what) {
    try {
        return parse_graph(extract_json_payload(response));
    } catch (const GraphError& e) {
        throw UnparseableResponse(what + ": " + e.what());
    }
}

std::vector<Entity> parse_candidates(const std::string& response) {
    json doc;
    try {
        doc = json::parse(extract_json_payload(response));
    } catch (const json::exception& e) {
        throw UnparseableResponse(std::string("candidate list is not JSON: ") + e.what());
    }
    json entities;
    if (doc.is_array()) {
        entities = doc;
    } else if (doc.is_object() && doc.contains("entities") && doc["entities"].is_array()) {
        entities = doc["entities"];
    } else {
        throw UnparseableResponse("candidate payload needs an 'entities' list");
    }
    json wrapper;
    wrapper["entities"] = entities;
    wrapper["relations"] = json::array();
    try {
        return graph_from_json(wrapper).entities();
    } catch (const GraphError& e) {
        throw UnparseableResponse(std::string("candidate entities invalid: ") + e.what());
    }
}

std::string candidates_to_string(const std::vector<Entity>& candidates) {
    return graph_to_json(KnowledgeGraph(candidates, {}))["entities"].dump();
}

ChatRequest extraction_request(const LlmContext& ctx, const PromptTemplate& tmpl,
                               std::string user_text, std::string request_id) {
    ChatRequest req;
    req.model = ctx.options.model;
    req.system_text = tmpl.system_text;
    req.user_text = std::move(user_text);
    req.temperature = ctx.options.extract_temperature;
    req.max_output_tokens = ctx.options.extract_max_tokens;
    req.request_id = std::move(request_id);
    return req;
}

}  // namespace

ExtractOutcome extract_corpus(const std::vector<Article>& articles, const LlmContext& ctx,
                              bool single_prompt, int parallel) {
    const std::string ontology = render_ontology_block(ctx.vocab);
    std::vector<std::optional<Prediction>> predictions(articles.size());
    std::vector<std::optional<RejectRow>> rejects(articles.size());
    parallel_for(articles.size(), parallel, [&](std::size_t i) {
        const Article& article = articles[i];
        try {
            KnowledgeGraph graph;
            if (single_prompt) {
                const PromptTemplate& tmpl = ctx.prompts.get(PromptName::SingleTraining);
                std::string user = tmpl.render({{"article", article.text}, {"ontology", ontology}});
                graph = parse_response_graph(
                    ctx.gateway.send(extraction_request(ctx, tmpl, user, article.id + ":single")),
                    "single-prompt extraction for " + article.id);
            } else {
                const PromptTemplate& step1 = ctx.prompts.get(PromptName::Step1Entities);
                std::string user1 =
                    step1.render({{"article", article.text}, {"ontology", ontology}});
                std::vector<Entity> candidates = parse_candidates(
                    ctx.gateway.send(extraction_request(ctx, step1, user1, article.id + ":step1")));

                const PromptTemplate& step2 = ctx.prompts.get(PromptName::Step2Finalize);
                std::string user2 = step2.render({{"article", article.text},
                                                  {"ontology", ontology},
                                                  {"candidates", candidates_to_string(candidates)}});
                graph = parse_response_graph(
                    ctx.gateway.send(extraction_request(ctx, step2, user2, article.id + ":step2")),
                    "finalize extraction for " + article.id);
            }
            predictions[i] =
                Prediction{article.id, article.source, connectivity_recheck(graph).graph};
        } catch (const UnparseableResponse& e) {
            rejects[i] = RejectRow{article.id, single_prompt ? "extract-single" : "extract",
                                   e.what()};
        }
    });
    ExtractOutcome out;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        if (predictions[i]) out.predictions.push_back(std::move(*predictions[i]));
        if (rejects[i]) out.rejects.push_back(std::move(*rejects[i]));
    }
    return out;
}

// ---- evaluate ----

namespace {

struct AuditFailure {
    std::string stage;
    std::string reason;
};

// One retry on parse failure, then the article is reported failed.
std::vector<AuditItem> judged_items(const LlmContext& ctx, const ChatRequest& req,
                                    std::size_t expected, AuditKind kind) {
    auto attempt = [&]() { return parse_verdicts(ctx.gateway.send(req), expected, kind); };
    try {
        return attempt();
    } catch (const GatewayError&) {
        throw;
    } catch (const std::exception&) {
        return attempt();
    }
}

}  // namespace

EvaluationRun evaluate_corpus(const std::vector<Prediction>& predictions,
                              const std::vector<AlignmentPair>& ground_truth,
                              const LlmContext& ctx, std::size_t min_edges, int parallel,
                              const std::string& label) {
    std::vector<AlignmentPair> gt = filter_benchmark(ground_truth, min_edges);
    std::map<std::string, const Prediction*> by_id;
    for (const Prediction& p : predictions) by_id.emplace(p.id, &p);

    const PromptTemplate& precision_tmpl = ctx.prompts.get(PromptName::JudgePrecision);
    const PromptTemplate& recall_tmpl = ctx.prompts.get(PromptName::JudgeRecall);

    std::vector<std::optional<ArticleEvaluation>> evaluations(gt.size());
    std::vector<std::optional<RejectRow>> failures(gt.size());
    parallel_for(gt.size(), parallel, [&](std::size_t i) {
        const AlignmentPair& pair = gt[i];
        static const KnowledgeGraph kEmptyGraph;
        auto found = by_id.find(pair.article.id);
        const KnowledgeGraph& predicted = found != by_id.end() ? found->second->graph : kEmptyGraph;

        ArticleEvaluation eval;
        eval.id = pair.article.id;
        eval.source = pair.article.source;

        const std::size_t n_pred = predicted.relations().size();
        const std::size_t n_gt = pair.graph.relations().size();
        if (n_pred == 0) {
            // Nothing predicted: precision 0 by decision, recall trivially 0.
            for (std::size_t k = 0; k < n_gt; ++k) {
                eval.recall_items.push_back(
                    {AuditKind::Recall, k, false, "no predicted edges"});
            }
            eval.metrics = article_metrics(eval.precision_items, eval.recall_items);
            evaluations[i] = std::move(eval);
            return;
        }

        auto judge_request = [&](const PromptTemplate& tmpl, const std::string& user,
                                 const char* suffix) {
            ChatRequest req;
            req.model = ctx.options.model;
            req.system_text = tmpl.system_text;
            req.user_text = user;
            req.temperature = ctx.options.judge_temperature;
            req.max_output_tokens = ctx.options.judge_max_tokens;
            req.request_id = pair.article.id + suffix;
            return req;
        };

        try {
            eval.precision_items = judged_items(
                ctx,
                judge_request(precision_tmpl,
                              build_precision_prompt(pair.article, predicted, pair.graph,
                                                     ctx.prompts),
                              ":judge-p"),
                n_pred, AuditKind::Precision);
        } catch (const GatewayError&) {
            throw;
        } catch (const std::exception& e) {
            failures[i] = RejectRow{pair.article.id, "judge-precision", e.what()};
            return;
        }
        try {
            eval.recall_items = judged_items(
                ctx,
                judge_request(recall_tmpl,
                              build_recall_prompt(pair.article, predicted, pair.graph, ctx.prompts),
                              ":judge-r"),
                n_gt, AuditKind::Recall);
        } catch (const GatewayError&) {
            throw;
        } catch (const std::exception& e) {
            failures[i] = RejectRow{pair.article.id, "judge-recall", e.what()};
            return;
        }
        eval.metrics = article_metrics(eval.precision_items, eval.recall_items);
        evaluations[i] = std::move(eval);
    });

    EvaluationRun run;
    run.label = label;
    std::map<Source, std::vector<ArticleMetrics>> per_article;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (evaluations[i]) {
            per_article[evaluations[i]->source].push_back(evaluations[i]->metrics);
            run.articles.push_back(std::move(*evaluations[i]));
        }
        if (failures[i]) run.failures.push_back(std::move(*failures[i]));
    }
    run.report = aggregate(per_article);
    return run;
}

namespace {

json audit_items_to_json(const std::vector<AuditItem>& items) {
    json arr = json::array();
    for (const AuditItem& item : items) {
        arr.push_back(json{{"index", item.edge_index},
                           {"verdict", item.verdict},
                           {"evidence", item.evidence}});
    }
    return arr;
}

std::vector<AuditItem> audit_items_from_json(const json& arr, AuditKind kind) {
    std::vector<AuditItem> items;
    for (const auto& entry : arr) {
        items.push_back({kind, entry.at("index").get<std::size_t>(),
                         entry.at("verdict").get<bool>(),
                         entry.value("evidence", std::string())});
    }
    return items;
}

}  // namespace

json evaluation_to_json(const EvaluationRun& run) {
    json doc;
    doc["label"] = run.label;
    doc["aggregation"] = "macro: per-article means per source, then source means";
    doc["avg"] = json{{"precision", run.report.avg_precision},
                      {"recall", run.report.avg_recall},
                      {"f1", run.report.avg_f1}};
    doc["rq3_score"] = rq3_score(run.report);
    json sources = json::array();
    for (const SourceMetrics& sm : run.report.per_source) {
        sources.push_back(json{{"source", to_string(sm.source)},
                               {"precision", sm.precision},
                               {"recall", sm.recall},
                               {"f1", sm.f1},
                               {"article_count", sm.article_count}});
    }
    doc["per_source"] = std::move(sources);
    json articles = json::array();
    for (const ArticleEvaluation& a : run.articles) {
        articles.push_back(json{{"id", a.id},
                                {"source", to_string(a.source)},
                                {"precision", a.metrics.precision},
                                {"recall", a.metrics.recall},
                                {"f1", a.metrics.f1},
                                {"precision_items", audit_items_to_json(a.precision_items)},
                                {"recall_items", audit_items_to_json(a.recall_items)}});
    }
    doc["articles"] = std::move(articles);
    json fails = json::array();
    for (const RejectRow& f : run.failures) fails.push_back(reject_to_json(f));
    doc["failures"] = std::move(fails);
    return doc;
}

EvaluationRun evaluation_from_json(const json& doc) {
    EvaluationRun run;
    run.label = doc.value("label", std::string("model"));
    run.report.avg_precision = doc.at("avg").at("precision").get<double>();
    run.report.avg_recall = doc.at("avg").at("recall").get<double>();
    run.report.avg_f1 = doc.at("avg").at("f1").get<double>();
    for (const auto& entry : doc.at("per_source")) {
        SourceMetrics sm;
        sm.source = source_from_string(entry.at("source").get<std::string>());
        sm.precision = entry.at("precision").get<double>();
        sm.recall = entry.at("recall").get<double>();
        sm.f1 = entry.at("f1").get<double>();
        sm.article_count = entry.at("article_count").get<std::size_t>();
        run.report.per_source.push_back(sm);
    }
    for (const auto& entry : doc.value("articles", json::array())) {
        ArticleEvaluation a;
        a.id = entry.at("id").get<std::string>();
        a.source = source_from_string(entry.at("source").get<std::string>());
        a.metrics.precision = entry.at("precision").get<double>();
        a.metrics.recall = entry.at("recall").get<double>();
        a.metrics.f1 = entry.at("f1").get<double>();
        a.precision_items = audit_items_from_json(entry.at("precision_items"), AuditKind::Precision);
        a.recall_items = audit_items_from_json(entry.at("recall_items"), AuditKind::Recall);
        run.articles.push_back(std::move(a));
    }
    for (const auto& entry : doc.value("failures", json::array())) {
        run.failures.push_back(RejectRow{entry.at("id").get<std::string>(),
                                         entry.at("stage").get<std::string>(),
                                         entry.at("reason").get<std::string>()});
    }
    return run;
}

std::string render_report_table(const EvaluationRun& run) {
    std::ostringstream out;
    const int label_w = std::max<int>(12, static_cast<int>(run.label.size()) + 2);
    char buf[64];

    auto pad = [](const std::string& s, int width) {
        std::string padded = s;
        while (static_cast<int>(padded.size()) < width) padded += ' ';
        return padded;
    };

    out << pad("Method", label_w);
    for (const SourceMetrics& sm : run.report.per_source) {
        out << "  " << pad(to_string(sm.source), 23);
    }
    out << "  " << pad("Avg", 23) << '\n';

    out << pad("", label_w);
    for (std::size_t i = 0; i < run.report.per_source.size() + 1; ++i) {
        std::snprintf(buf, sizeof(buf), "  %7s %7s %7s", "P", "R", "F1");
        out << buf;
    }
    out << '\n';

    out << pad(run.label, label_w);
    for (const SourceMetrics& sm : run.report.per_source) {
        std::snprintf(buf, sizeof(buf), "  %7.2f %7.2f %7.2f", sm.precision * 100.0,
                      sm.recall * 100.0, sm.f1 * 100.0);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "  %7.2f %7.2f %7.2f", run.report.avg_precision * 100.0,
                  run.report.avg_recall * 100.0, run.report.avg_f1 * 100.0);
    out << buf << '\n';

    if (!run.failures.empty()) {
        out << "failed audits:";
        for (const RejectRow& f : run.failures) out << ' ' << f.id << '(' << f.stage << ')';
        out << '\n';
    }
    return out.str();
}

// ---- scores ----

json scores_to_json(const std::vector<ComplexityScore>& scores) {
    json doc;
    doc["header"] = json{
        {"version", "cx-v1"},
        {"percentile", "mid-rank"},
        {"metric_definitions",
         "implementation-defined: alias = entities with >=1 alias; connectivity = mean degree "
         "2|R|/|E|; span = mean anchored span length; crossing = properly interleaving edge pairs "
         "over first-mention order"},
    };
    json rows = json::array();
    for (const ComplexityScore& s : scores) {
        rows.push_back(json{{"article_id", s.article_id},
                            {"c_base", s.c_base},
                            {"c_graph", s.c_graph},
                            {"c_article", s.c_article},
                            {"ranks", s.breakdown},
                            {"values", s.metrics}});
    }
    doc["scores"] = std::move(rows);
    return doc;
}

// ---- reward server ----

void attach_reward_routes(httplib::Server& server,
                          std::shared_ptr<const std::map<std::string, RewardTask>> tasks) {
    server.Post("/score", [tasks](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":"request body is not JSON"})", "application/json");
            return;
        }
        if (!body.contains("task_id") || !body["task_id"].is_string() ||
            !body.contains("text") || !body["text"].is_string()) {
            res.status = 400;
            res.set_content(R"({"error":"need string fields task_id and text"})",
                            "application/json");
            return;
        }
        auto it = tasks->find(body["task_id"].get<std::string>());
        if (it == tasks->end()) {
            res.status = 404;
            res.set_content(R"({"error":"unknown task_id"})", "application/json");
            return;
        }
        RewardBreakdown breakdown = score_rollout(it->second, body["text"].get<std::string>());
        json out{{"format_bonus", breakdown.format_bonus},
                 {"main", breakdown.main},
                 {"total", breakdown.total},
                 {"detail", breakdown.detail}};
        res.set_content(out.dump(), "application/json");
    });
}

std::vector<ComplexityScore> scores_from_json(const json& doc) {
    std::vector<ComplexityScore> scores;
    for (const auto& entry : doc.at("scores")) {
        ComplexityScore s;
        s.article_id = entry.at("article_id").get<std::string>();
        s.c_base = entry.at("c_base").get<double>();
        s.c_graph = entry.at("c_graph").get<double>();
        s.c_article = entry.at("c_article").get<double>();
        const json ranks = entry.value("ranks", json::object());
        for (const auto& [k, v] : ranks.items()) s.breakdown[k] = v.get<double>();
        const json values = entry.value("values", json::object());
        for (const auto& [k, v] : values.items()) s.metrics[k] = v.get<double>();
        scores.push_back(std::move(s));
    }
    return scores;
}

}  // namespace tracekg
