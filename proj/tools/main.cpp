#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "tracekg/checksum.hpp"
#include "tracekg/jsonl.hpp"
#include "tracekg/manifest.hpp"
#include "tracekg/pipeline.hpp"

namespace {

using namespace tracekg;
using nlohmann::json;

std::filesystem::path default_vocab_path() {
    if (const char* env = std::getenv("TRACEKG_VOCAB"); env && *env) return env;
#ifdef TRACEKG_SOURCE_DIR
    return std::filesystem::path(TRACEKG_SOURCE_DIR) / "data" / "ontology_vocab.json";
#else
    return std::filesystem::path("data") / "ontology_vocab.json";
#endif
}

// Minimal key/value config: `key = value` lines, '#' comments, optional quotes.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    for (std::string& line : split_lines(read_text_file(path))) {
        std::string_view view = line;
        while (!view.empty() && (view.front() == ' ' || view.front() == '\t')) view.remove_prefix(1);
        if (view.empty() || view.front() == '#' || view.front() == '[') continue;
        std::size_t eq = view.find('=');
        if (eq == std::string_view::npos) continue;
        auto trim = [](std::string_view s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.remove_suffix(1);
            if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                                  (s.front() == '\'' && s.back() == '\''))) {
                s = s.substr(1, s.size() - 2);
            }
            return std::string(s);
        };
        out[trim(view.substr(0, eq))] = trim(view.substr(eq + 1));
    }
    return out;
}

struct CommonFlags {
    std::string config_path;
    std::string mock_path;
    std::string record_path;
    std::string endpoint;
    std::string model;
    std::string prompts_dir;
    std::string vocab_path;
    int parallel = 1;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags, bool with_gateway = true) {
    cmd->add_option("--prompts", flags->prompts_dir, "Prompt template directory");
    cmd->add_option("--vocab", flags->vocab_path, "Ontology vocabulary file");
    if (with_gateway) {
        cmd->add_option("--config", flags->config_path, "Gateway config file (key = value)");
        cmd->add_option("--mock", flags->mock_path, "Replay fixtures (deterministic, offline)");
        cmd->add_option("--record", flags->record_path, "Record fixtures while calling live");
        cmd->add_option("--endpoint", flags->endpoint, "Chat-completions endpoint base URL");
        cmd->add_option("--model", flags->model, "Model name");
        cmd->add_option("--parallel", flags->parallel, "Concurrent articles")
            ->check(CLI::PositiveNumber);
    }
}

struct Runtime {
    GatewayConfig gateway_config;
    LlmOptions options;
    std::unique_ptr<Gateway> gateway;
    PromptLibrary prompts;
    OntologyVocab vocab = OntologyVocab::builtin();

    LlmContext context() const { return LlmContext{*gateway, prompts, vocab, options}; }

    std::map<std::string, std::string> config_checksums() const {
        std::map<std::string, std::string> sums;
        for (const auto& [name, sum] : prompts.checksums()) sums["prompt." + name] = sum;
        sums["ontology_vocab"] = vocab.checksum();
        sums["normalization_version"] = kNormalizationVersion;
        return sums;
    }
};

Runtime make_runtime(const CommonFlags& flags) {
    Runtime rt;
    if (!flags.config_path.empty()) {
        auto cfg = parse_config_file(flags.config_path);
        auto get = [&](const char* key) -> const std::string* {
            auto it = cfg.find(key);
            return it == cfg.end() ? nullptr : &it->second;
        };
        if (auto* v = get("endpoint_url")) rt.gateway_config.endpoint_url = *v;
        if (auto* v = get("chat_path")) rt.gateway_config.chat_path = *v;
        if (auto* v = get("credential_env_var")) rt.gateway_config.credential_env_var = *v;
        if (auto* v = get("model")) rt.gateway_config.model = *v;
        if (auto* v = get("timeout_seconds")) rt.gateway_config.timeout_seconds = std::stod(*v);
        if (auto* v = get("max_attempts")) rt.gateway_config.max_attempts = std::stoi(*v);
        if (auto* v = get("max_in_flight")) rt.gateway_config.max_in_flight = std::stoi(*v);
        if (auto* v = get("backoff_base_seconds"))
            rt.gateway_config.backoff_base_seconds = std::stod(*v);
        if (auto* v = get("backoff_factor")) rt.gateway_config.backoff_factor = std::stod(*v);
        if (auto* v = get("extra_params")) rt.gateway_config.extra_params_json = *v;
        if (auto* v = get("extract_temperature")) rt.options.extract_temperature = std::stod(*v);
        if (auto* v = get("extract_max_tokens")) rt.options.extract_max_tokens = std::stoi(*v);
        if (auto* v = get("judge_temperature")) rt.options.judge_temperature = std::stod(*v);
        if (auto* v = get("judge_max_tokens")) rt.options.judge_max_tokens = std::stoi(*v);
        if (auto* v = get("model")) rt.options.model = *v;
    }
    if (!flags.endpoint.empty()) rt.gateway_config.endpoint_url = flags.endpoint;
    if (!flags.model.empty()) {
        rt.gateway_config.model = flags.model;
        rt.options.model = flags.model;
    }
    if (!flags.mock_path.empty()) {
        rt.gateway_config.mode = GatewayMode::Replay;
        rt.gateway_config.fixture_path = flags.mock_path;
    } else if (!flags.record_path.empty()) {
        rt.gateway_config.mode = GatewayMode::Record;
        rt.gateway_config.fixture_path = flags.record_path;
    }
    rt.gateway = make_gateway(rt.gateway_config);
    rt.prompts = PromptLibrary::load_dir(flags.prompts_dir.empty()
                                             ? PromptLibrary::default_dir()
                                             : std::filesystem::path(flags.prompts_dir));
    rt.vocab = OntologyVocab::load_file(flags.vocab_path.empty()
                                            ? default_vocab_path()
                                            : std::filesystem::path(flags.vocab_path));
    return rt;
}

std::vector<Article> read_articles(const std::filesystem::path& path) {
    std::vector<Article> articles;
    for (const json& row : read_jsonl(path)) articles.push_back(article_from_json(row));
    return articles;
}

RunManifest start_manifest(const Runtime& rt, const std::string& command) {
    RunManifest manifest;
    manifest.command = command;
    manifest.gateway_mode = to_string(rt.gateway_config.mode);
    manifest.config_checksums = rt.config_checksums();
    manifest.started_at = utc_timestamp();
    return manifest;
}

// For subcommands that never touch the gateway or prompt templates.
RunManifest start_local_manifest(const std::string& command) {
    RunManifest manifest;
    manifest.command = command;
    manifest.gateway_mode = "none";
    manifest.config_checksums["normalization_version"] = kNormalizationVersion;
    manifest.started_at = utc_timestamp();
    return manifest;
}

void finish_manifest(RunManifest manifest, const std::filesystem::path& out) {
    manifest.finished_at = utc_timestamp();
    write_manifest(out, manifest);
}

// ---- subcommand bodies ----

int run_validate(const std::string& in_path, const std::string& vocab_path) {
    OntologyVocab vocab = OntologyVocab::load_file(
        vocab_path.empty() ? default_vocab_path() : std::filesystem::path(vocab_path));

    auto report = [&](const KnowledgeGraph& graph, const std::string& article_id) {
        std::size_t count = 0;
        for (const Violation& v : validate_graph(graph, vocab)) {
            json row{{"kind", to_string(v.kind)}, {"subject", v.subject}, {"detail", v.detail}};
            if (!article_id.empty()) row["article_id"] = article_id;
            std::cout << row.dump() << '\n';
            ++count;
        }
        for (const std::string& name : connectivity_recheck(graph).removed) {
            json row{{"kind", to_string(ViolationKind::IsolatedEntity)},
                     {"subject", name},
                     {"detail", "entity has no relation, parent, or alias support"}};
            if (!article_id.empty()) row["article_id"] = article_id;
            std::cout << row.dump() << '\n';
            ++count;
        }
        return count;
    };

    std::size_t total = 0;
    const std::string text = read_text_file(in_path);
    bool single_graph = false;
    try {
        json doc = json::parse(text);
        if (doc.is_object() && doc.contains("entities")) {
            total = report(graph_from_json(doc), "");
            single_graph = true;
        }
    } catch (const json::exception&) {
        single_graph = false;
    }
    if (!single_graph) {
        for (const json& row : read_jsonl(in_path)) {
            AlignmentPair pair = pair_from_json(row);
            total += report(pair.graph, pair.article.id);
        }
    }
    return total == 0 ? 0 : 1;
}

int run_align(const CommonFlags& flags, const std::string& in_path, const std::string& out_path) {
    Runtime rt = make_runtime(flags);
    RunManifest manifest = start_manifest(rt, "align");
    manifest.inputs = {in_path};

    AlignOutcome outcome = align_corpus(read_articles(in_path), rt.context(), flags.parallel);
    write_jsonl(out_path, pairs_to_rows(outcome.pairs));
    std::filesystem::path rejects = sidecar_path(out_path, "rejects", ".jsonl");
    std::vector<json> reject_rows;
    for (const RejectRow& row : outcome.rejects) reject_rows.push_back(reject_to_json(row));
    write_jsonl(rejects, reject_rows);

    manifest.outputs = {out_path, rejects};
    finish_manifest(std::move(manifest), out_path);
    std::cerr << "aligned " << outcome.pairs.size() << " article(s), rejected "
              << outcome.rejects.size() << '\n';
    return 0;
}

int run_taskbank(const CommonFlags& flags, const std::string& pairs_path,
                 const std::string& out_path, std::size_t max_choice,
                 const std::string& scores_path) {
    Runtime rt = make_runtime(flags);
    RunManifest manifest = start_manifest(rt, "taskbank");
    manifest.inputs = {pairs_path};
    if (!scores_path.empty()) manifest.inputs.push_back(scores_path);

    std::vector<AlignmentPair> pairs = pairs_from_rows(read_jsonl(pairs_path));
    LlmContext ctx = rt.context();
    BankOutcome outcome = build_bank_corpus(pairs, ctx, max_choice, flags.parallel);
    if (!scores_path.empty()) {
        // Every task derived from an article inherits that article's score.
        std::map<std::string, double> score_of;
        for (const ComplexityScore& s :
             scores_from_json(json::parse(read_text_file(scores_path)))) {
            score_of[s.article_id] = s.c_article;
        }
        for (TaskBank& bank : outcome.banks) {
            auto it = score_of.find(bank.article_id);
            if (it == score_of.end()) {
                throw std::runtime_error("article " + bank.article_id +
                                         " has no complexity score");
            }
            bank.complexity = it->second;
        }
    }
    write_jsonl(out_path, bank_to_rows(outcome.banks, ctx));
    std::filesystem::path rejects = sidecar_path(out_path, "rejects", ".jsonl");
    std::vector<json> reject_rows;
    for (const RejectRow& row : outcome.rejects) reject_rows.push_back(reject_to_json(row));
    write_jsonl(rejects, reject_rows);

    manifest.outputs = {out_path, rejects};
    finish_manifest(std::move(manifest), out_path);
    std::cerr << "built banks for " << outcome.banks.size() << " article(s), rejected "
              << outcome.rejects.size() << '\n';
    return 0;
}

int run_complexity(const std::string& pairs_path, const std::string& out_path) {
    RunManifest manifest = start_local_manifest("complexity");
    manifest.inputs = {pairs_path};

    std::vector<AlignmentPair> pairs = pairs_from_rows(read_jsonl(pairs_path));
    std::vector<ComplexityScore> scores = score_corpus(pairs);
    write_text_file(out_path, scores_to_json(scores).dump(2) + "\n");

    manifest.outputs = {out_path};
    finish_manifest(std::move(manifest), out_path);
    return 0;
}

int run_order(const std::string& pairs_path, const std::string& scores_path,
              const std::string& out_path) {
    RunManifest manifest = start_local_manifest("order");
    manifest.inputs = {pairs_path, scores_path};

    std::vector<json> rows = read_jsonl(pairs_path);
    std::map<std::string, const json*> by_id;
    for (const json& row : rows) by_id[row.at("id").get<std::string>()] = &row;

    std::vector<ComplexityScore> scores =
        scores_from_json(json::parse(read_text_file(scores_path)));
    std::vector<json> ordered;
    for (const std::string& id : order_corpus(scores)) {
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;  // scored article absent from the pairs file
        ordered.push_back(*it->second);
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        throw std::runtime_error("article " + by_id.begin()->first + " has no complexity score");
    }
    write_jsonl(out_path, ordered);

    manifest.outputs = {out_path};
    finish_manifest(std::move(manifest), out_path);
    return 0;
}

int run_reward_batch(const std::string& bank_path, const std::string& outputs_path,
                     const std::string& out_path) {
    RunManifest manifest = start_local_manifest("reward");
    manifest.inputs = {bank_path, outputs_path};

    std::map<std::string, RewardTask> tasks = tasks_from_rows(read_jsonl(bank_path));
    std::vector<json> out_rows;
    for (const json& row : read_jsonl(outputs_path)) {
        const std::string task_id = row.at("task_id").get<std::string>();
        auto it = tasks.find(task_id);
        if (it == tasks.end()) {
            throw std::runtime_error("unknown task_id in rollouts: " + task_id);
        }
        RewardBreakdown b = score_rollout(it->second, row.at("text").get<std::string>());
        out_rows.push_back(json{{"task_id", task_id},
                                {"format_bonus", b.format_bonus},
                                {"main", b.main},
                                {"total", b.total},
                                {"detail", b.detail}});
    }
    write_jsonl(out_path, out_rows);

    manifest.outputs = {out_path};
    finish_manifest(std::move(manifest), out_path);
    return 0;
}

int run_reward_server(const std::string& bank_path, int port) {
    auto tasks = std::make_shared<const std::map<std::string, RewardTask>>(
        tasks_from_rows(read_jsonl(bank_path)));
    httplib::Server server;
    attach_reward_routes(server, tasks);
    std::cerr << "scoring " << tasks->size() << " task(s) on port " << port << '\n';
    if (!server.listen("0.0.0.0", port)) {
        throw std::runtime_error("could not bind port " + std::to_string(port));
    }
    return 0;
}

int run_extract(const CommonFlags& flags, const std::string& in_path, const std::string& out_path,
                bool single_prompt) {
    Runtime rt = make_runtime(flags);
    RunManifest manifest = start_manifest(rt, single_prompt ? "extract --single" : "extract");
    manifest.inputs = {in_path};

    ExtractOutcome outcome =
        extract_corpus(read_articles(in_path), rt.context(), single_prompt, flags.parallel);
    std::vector<json> rows;
    for (const Prediction& p : outcome.predictions) {
        rows.push_back(json{{"id", p.id},
                            {"source", to_string(p.source)},
                            {"graph", graph_to_json(p.graph)}});
    }
    write_jsonl(out_path, rows);
    std::filesystem::path rejects = sidecar_path(out_path, "rejects", ".jsonl");
    std::vector<json> reject_rows;
    for (const RejectRow& row : outcome.rejects) reject_rows.push_back(reject_to_json(row));
    write_jsonl(rejects, reject_rows);

    manifest.outputs = {out_path, rejects};
    finish_manifest(std::move(manifest), out_path);
    std::cerr << "extracted " << outcome.predictions.size() << " graph(s), rejected "
              << outcome.rejects.size() << '\n';
    return 0;
}

int run_evaluate(const CommonFlags& flags, const std::string& pred_path,
                 const std::string& gt_path, const std::string& out_path, std::size_t min_edges,
                 const std::string& label) {
    Runtime rt = make_runtime(flags);
    RunManifest manifest = start_manifest(rt, "evaluate");
    manifest.inputs = {pred_path, gt_path};

    std::vector<Prediction> predictions;
    for (const json& row : read_jsonl(pred_path)) {
        predictions.push_back(Prediction{row.at("id").get<std::string>(),
                                         source_from_string(row.value("source", "custom")),
                                         graph_from_json(row.at("graph"))});
    }
    std::vector<AlignmentPair> ground_truth = pairs_from_rows(read_jsonl(gt_path));
    EvaluationRun run = evaluate_corpus(predictions, ground_truth, rt.context(), min_edges,
                                        flags.parallel, label);
    json doc = evaluation_to_json(run);
    doc["ontology_checksum"] = rt.vocab.checksum();
    doc["min_edges"] = min_edges;
    write_text_file(out_path, doc.dump(2) + "\n");

    manifest.outputs = {out_path};
    finish_manifest(std::move(manifest), out_path);
    std::cerr << "evaluated " << run.articles.size() << " article(s), " << run.failures.size()
              << " failed audit(s)\n";
    return 0;
}

int run_report(const std::string& in_path) {
    EvaluationRun run = evaluation_from_json(json::parse(read_text_file(in_path)));
    std::cout << render_report_table(run);
    return 0;
}

int run_agreement(const std::string& audits_path, const std::string& human_path) {
    std::map<std::string, std::pair<AuditKind, bool>> llm;
    for (const json& row : read_jsonl(audits_path)) {
        AuditKind kind = row.at("kind").get<std::string>() == "recall" ? AuditKind::Recall
                                                                       : AuditKind::Precision;
        llm[row.at("item_id").get<std::string>()] = {kind, row.at("verdict").get<bool>()};
    }
    std::vector<CalibrationItem> items;
    for (const json& row : read_jsonl(human_path)) {
        const std::string id = row.at("item_id").get<std::string>();
        auto it = llm.find(id);
        if (it == llm.end()) {
            throw std::runtime_error("human item " + id + " has no matching audit");
        }
        items.push_back(
            CalibrationItem{it->second.first, it->second.second, row.at("verdict").get<bool>()});
    }
    AgreementRates rates = agreement(items);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "precision_agreement %.4f\n", rates.precision);
    std::cout << buf;
    std::snprintf(buf, sizeof(buf), "recall_agreement %.4f\n", rates.recall);
    std::cout << buf;
    std::snprintf(buf, sizeof(buf), "overall_agreement %.4f\n", rates.overall);
    std::cout << buf;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Security-text knowledge graph pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* validate = app.add_subcommand("validate", "Check a graph or pairs file against the ontology");
    std::string validate_in;
    validate->add_option("--in", validate_in, "Graph JSON or pairs JSONL")->required();
    add_common_flags(validate, &flags, false);

    auto* align = app.add_subcommand("align", "Build article-graph alignment pairs");
    std::string align_in, align_out;
    align->add_option("--in", align_in, "Articles JSONL")->required();
    align->add_option("--out", align_out, "Pairs JSONL")->required();
    add_common_flags(align, &flags);

    auto* taskbank = app.add_subcommand("taskbank", "Build supervision banks from pairs");
    std::string bank_pairs, bank_out, bank_scores;
    std::size_t max_choice = 20;
    taskbank->add_option("--pairs", bank_pairs, "Pairs JSONL")->required();
    taskbank->add_option("--out", bank_out, "Bank JSONL")->required();
    taskbank->add_option("--max-choice", max_choice, "Choice questions per article");
    taskbank->add_option("--scores", bank_scores, "Complexity scores to attach per article");
    add_common_flags(taskbank, &flags);

    auto* complexity = app.add_subcommand("complexity", "Score article complexity");
    std::string cx_pairs, cx_out;
    complexity->add_option("--pairs", cx_pairs, "Pairs JSONL")->required();
    complexity->add_option("--out", cx_out, "Scores JSON")->required();

    auto* order = app.add_subcommand("order", "Write pairs in easy-to-hard order");
    std::string order_pairs, order_scores, order_out;
    order->add_option("--pairs", order_pairs, "Pairs JSONL")->required();
    order->add_option("--scores", order_scores, "Scores JSON")->required();
    order->add_option("--out", order_out, "Ordered pairs JSONL")->required();

    auto* reward = app.add_subcommand("reward", "Score rollouts against a bank");
    std::string reward_bank, reward_outputs, reward_out;
    bool serve = false;
    int port = 8080;
    reward->add_option("--bank", reward_bank, "Bank JSONL")->required();
    reward->add_option("--outputs", reward_outputs, "Rollouts JSONL");
    reward->add_option("--out", reward_out, "Rewards JSONL");
    reward->add_flag("--serve", serve, "Run the scoring endpoint instead of batch mode");
    reward->add_option("--port", port, "Scoring endpoint port");

    auto* extract = app.add_subcommand("extract", "Two-prompt graph inference");
    std::string extract_in, extract_out;
    bool single_prompt = false;
    extract->add_option("--in", extract_in, "Articles JSONL")->required();
    extract->add_option("--out", extract_out, "Predictions JSONL")->required();
    extract->add_flag("--single", single_prompt, "Use the merged single-prompt variant");
    add_common_flags(extract, &flags);

    auto* evaluate = app.add_subcommand("evaluate", "Judge predictions against ground truth");
    std::string eval_pred, eval_gt, eval_out, eval_label = "model";
    std::size_t min_edges = 5;
    evaluate->add_option("--pred", eval_pred, "Predictions JSONL")->required();
    evaluate->add_option("--gt", eval_gt, "Ground-truth pairs JSONL")->required();
    evaluate->add_option("--out", eval_out, "Report JSON")->required();
    evaluate->add_option("--min-edges", min_edges, "Minimum ground-truth edges per article");
    evaluate->add_option("--label", eval_label, "Method label for the report");
    add_common_flags(evaluate, &flags);

    auto* report = app.add_subcommand("report", "Render a report as a fixed-width table");
    std::string report_in;
    report->add_option("--in", report_in, "Report JSON")->required();

    auto* agreement_cmd = app.add_subcommand("agreement", "Judge-human agreement rates");
    std::string agr_audits, agr_human;
    agreement_cmd->add_option("--audits", agr_audits, "Audit verdicts JSONL")->required();
    agreement_cmd->add_option("--human", agr_human, "Human verdicts JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return run_validate(validate_in, flags.vocab_path);
        if (align->parsed()) return run_align(flags, align_in, align_out);
        if (taskbank->parsed())
            return run_taskbank(flags, bank_pairs, bank_out, max_choice, bank_scores);
        if (complexity->parsed()) return run_complexity(cx_pairs, cx_out);
        if (order->parsed()) return run_order(order_pairs, order_scores, order_out);
        if (reward->parsed()) {
            if (serve) return run_reward_server(reward_bank, port);
            if (reward_outputs.empty() || reward_out.empty()) {
                std::cerr << "reward batch mode needs --outputs and --out\n";
                return 2;
            }
            return run_reward_batch(reward_bank, reward_outputs, reward_out);
        }
        if (extract->parsed()) return run_extract(flags, extract_in, extract_out, single_prompt);
        if (evaluate->parsed())
            return run_evaluate(flags, eval_pred, eval_gt, eval_out, min_edges, eval_label);
        if (report->parsed()) return run_report(report_in);
        if (agreement_cmd->parsed()) return run_agreement(agr_audits, agr_human);
    } catch (const AlignmentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.gateway ? 3 : 1;
    } catch (const GatewayError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
