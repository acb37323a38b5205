// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/builders.hpp"
#include "support/corpus.hpp"
#include "support/fakes.hpp"
#include "tracekg/alignment.hpp"
#include "tracekg/complexity.hpp"
#include "tracekg/evaluator.hpp"
#include "tracekg/jsonl.hpp"
#include "tracekg/pipeline.hpp"
#include "tracekg/reward.hpp"
#include "tracekg/taskbank.hpp"

using namespace tracekg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int index, const std::string& name, Fn fn) {
    try {
        auto [pass, detail] = fn();
        report(index, name, pass, detail);
    } catch (const std::exception& e) {
        report(index, name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

// ---- criterion 1 ----

struct PublishedRow {
    const char* method;
    // P, R, F1 per source: CASIE, CTINexus, GRID, MalKG, SecureNLP; then Avg P, R, F1.
    double cells[15];
    double avg[3];
};

const PublishedRow kPublished[] = {
    {"task-bank",
     {81.80, 77.68, 77.22, 86.69, 81.10, 82.58, 84.18, 78.11, 79.62, 84.43, 38.55, 44.66, 85.97,
      49.10, 58.58},
     {84.62, 64.91, 68.53}},
    {"end2end",
     {80.88, 66.98, 70.76, 80.30, 76.67, 76.83, 78.71, 64.93, 67.35, 74.94, 24.87, 31.61, 69.71,
      35.81, 43.77},
     {76.91, 53.85, 58.06}},
    {"ctinexus",
     {83.44, 61.41, 67.49, 86.75, 91.02, 87.83, 83.62, 71.64, 75.91, 88.71, 39.42, 48.24, 85.07,
      53.88, 63.80},
     {85.52, 63.47, 68.66}},
    {"cognee",
     {48.87, 43.75, 39.79, 63.98, 64.58, 61.80, 57.13, 52.01, 50.24, 63.74, 27.73, 30.33, 68.04,
      48.74, 52.54},
     {60.35, 47.36, 46.94}},
    {"llm-cakg",
     {85.39, 52.76, 58.81, 79.90, 55.63, 63.41, 80.65, 69.61, 72.60, 78.49, 38.27, 46.70, 80.35,
      65.16, 68.70},
     {80.96, 56.29, 62.04}},
    {"graphiti",
     {70.50, 24.39, 32.40, 70.87, 35.05, 44.39, 69.97, 46.13, 51.50, 74.12, 32.14, 39.02, 71.78,
      33.88, 43.35},
     {71.45, 34.32, 42.13}},
    {"ctikg",
     {87.41, 34.51, 44.57, 82.67, 40.82, 50.25, 84.28, 43.06, 52.30, 79.20, 18.91, 26.29, 84.12,
      40.61, 51.12},
     {83.54, 35.58, 44.91}},
    {"graphrag",
     {90.30, 12.43, 16.69, 87.09, 33.79, 43.81, 77.28, 35.70, 44.07, 88.10, 21.32, 30.25, 84.93,
      20.26, 25.62},
     {85.54, 24.70, 32.09}},
    {"attackg+",
     {26.35, 19.54, 16.67, 25.65, 36.27, 26.55, 26.50, 25.66, 20.06, 48.22, 13.64, 15.04, 48.47,
      44.01, 42.95},
     {35.04, 27.82, 24.25}},
    {"knowgl",
     {25.83, 0.40, 0.53, 27.34, 1.42, 2.35, 23.71, 1.93, 2.20, 28.94, 2.05, 2.85, 28.80, 5.58,
      6.89},
     {26.93, 2.28, 2.96}},
};

std::pair<bool, std::string> check_table_regression() {
    const Source sources[] = {Source::Casie, Source::CtiNexus, Source::Grid, Source::MalKg,
                              Source::SecureNlp};
    auto started = std::chrono::steady_clock::now();
    int within_strict = 0;
    int cells = 0;
    double worst = 0.0;
    std::string worst_cell;
    for (const PublishedRow& row : kPublished) {
        std::map<Source, std::vector<ArticleMetrics>> per_article;
        for (int s = 0; s < 5; ++s) {
            per_article[sources[s]] = {{row.cells[3 * s] / 100.0, row.cells[3 * s + 1] / 100.0,
                                        row.cells[3 * s + 2] / 100.0}};
        }
        BenchmarkReport rep = aggregate(per_article);
        const double got[3] = {rep.avg_precision * 100.0, rep.avg_recall * 100.0,
                               rep.avg_f1 * 100.0};
        const char* col[3] = {"P", "R", "F1"};
        for (int k = 0; k < 3; ++k) {
            double delta = std::abs(got[k] - row.avg[k]);
            ++cells;
            if (delta <= 0.005 + 1e-9) ++within_strict;
            if (delta > worst) {
                worst = delta;
                worst_cell = std::string(row.method) + " Avg " + col[k];
            }
            // Bound for values quantized to 2 decimals on both sides of the
            // published table: inputs contribute up to 0.005, the printed
            // average another 0.005.
            if (delta > 0.010 + 1e-9) {
                return {false, "cell " + std::string(row.method) + " Avg " + col[k] +
                                   " off by " + fmt(delta, 4)};
            }
        }
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
    if (elapsed.count() >= 1.0) return {false, "took " + fmt(elapsed.count(), 3) + "s"};
    // 27 of 30 published Avg cells sit within ±0.005 of the mean of their
    // rounded per-source cells. The other three (task-bank Avg P, ctinexus
    // Avg F1, knowgl Avg P) differ by exactly 0.006: the table rounds both
    // the inputs and the average to 2 decimals, which can move the printed
    // average up to 0.01 from the mean of the printed inputs.
    bool pass = within_strict >= 27;
    return {pass, std::to_string(within_strict) + "/30 cells within ±0.005, all within the "
                      "±0.01 double-rounding bound (worst " +
                      worst_cell + " at " + fmt(worst, 4) + ")"};
}

// ---- criterion 2 ----

std::pair<bool, std::string> check_reward_exactness() {
    if (choice_reward({'A', 'C'}, {'A', 'C'}) != 1.0) return {false, "exact match != 1.0"};
    if (choice_reward({}, {}) != 1.0) return {false, "empty-vs-empty != 1.0"};
    if (choice_reward({'A'}, {'A', 'C'}) != 0.5) return {false, "overlap != 0.5"};
    if (choice_reward({'B', 'D'}, {'A', 'C'}) != 0.0) return {false, "disjoint != 0.0"};
    if (choice_reward({}, {'A'}) != 0.0) return {false, "empty-vs-nonempty != 0.0"};

    std::mt19937 rng(20260810);
    std::uniform_int_distribution<int> n_targets(1, 8);
    std::uniform_int_distribution<int> n_pred(0, 8);
    std::uniform_int_distribution<int> vocab(0, 5);
    auto word = [](int v) { return "w" + std::to_string(v); };
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<RegexTarget> targets;
        int nt = n_targets(rng);
        for (int i = 0; i < nt; ++i) {
            targets.push_back({"acc", static_cast<std::size_t>(i), word(vocab(rng)),
                               word(vocab(rng)), word(vocab(rng))});
        }
        std::vector<Triple> pred;
        for (int i = 0, np = n_pred(rng); i < np; ++i) {
            pred.push_back({word(vocab(rng)), word(vocab(rng)), word(vocab(rng))});
        }
        // Brute-force double loop with literal string comparison as the oracle.
        std::size_t n_match = 0;
        for (const RegexTarget& t : targets) {
            bool hit = false;
            for (const Triple& p : pred) {
                hit = hit || (normalize(p.sub) == t.sub_pattern &&
                              normalize(p.rel) == t.rel_pattern &&
                              normalize(p.obj) == t.obj_pattern);
            }
            if (hit) ++n_match;
        }
        RegexRewardResult got = regex_reward(pred, targets);
        double expected = static_cast<double>(n_match) / static_cast<double>(nt);
        if (got.reward != expected) {
            return {false, "trial " + std::to_string(trial) + ": reward " + fmt(got.reward) +
                               " != " + fmt(expected)};
        }
    }

    ChoiceQuestion q;
    q.article_id = "acc";
    q.options = {"a — b — c", "d — e — f", "g — h — i", "j — k — l"};
    q.answer_set = {'B'};
    RewardBreakdown with_format = score_rollout(q, "reasoning line\nAnswer: B");
    RewardBreakdown without_format = score_rollout(q, "Answer: B");
    if (with_format.format_bonus != 0.1) return {false, "format bonus != 0.1"};
    if (without_format.format_bonus != 0.0) return {false, "withheld bonus != 0.0"};
    if (with_format.total != 1.1) return {false, "total != 1.1"};
    return {true, "choice table exact, 500 regex oracle trials exact, bonus exactly 0.1"};
}

// ---- criterion 3 ----

std::pair<bool, std::string> check_calibration() {
    std::vector<CalibrationItem> items;
    for (int i = 0; i < 191; ++i) items.push_back({AuditKind::Precision, true, i < 154});
    for (int i = 0; i < 187; ++i) items.push_back({AuditKind::Recall, true, i < 171});
    AgreementRates rates = agreement(items);
    auto close = [](double got, double want) { return std::abs(got - want) <= 0.0005; };
    bool pass = close(rates.precision, 0.806) && close(rates.recall, 0.914) &&
                close(rates.overall, 0.860);
    return {pass, fmt(rates.precision) + " / " + fmt(rates.recall) + " / " + fmt(rates.overall)};
}

// ---- criterion 4 ----

AlignmentPair dominant_pair_weak() {
    testing::SentenceSpec s1{
        "AcmeBot quietly contacts rally-point.example every single morning before the workday "
        "begins, while the rest of this bulletin covers ordinary seasonal office chatter about "
        "parking, coffee machines, stairwells, elevators, and the annual charity bake sale that "
        "nobody in the building ever wants to miss.",
        {testing::EdgePayload{"AcmeBot", "quietly contacts", "communicates-with",
                              "rally-point.example", "", ""}}};
    std::vector<Entity> entities{{"AcmeBot", "malware", {}, std::nullopt},
                                 {"rally-point.example", "domain-name", {}, std::nullopt}};
    testing::BuiltArticle built = testing::build_article("weak", Source::Custom, {s1}, entities);
    return {built.article, built.graph};
}

AlignmentPair dominant_pair_strong() {
    using testing::EdgePayload;
    using testing::SentenceSpec;
    std::vector<SentenceSpec> sentences{
        {"AlphaKit and BetaKit surfaced together in January campaigns.", {}},
        {"AlphaKit eventually delivers, after weeks of meticulous staging and careful testing "
         "cycles, the GammaPanel console.",
         {EdgePayload{"AlphaKit", "delivers", "delivers", "GammaPanel", "", ""}}},
        {"BetaKit likewise beacons, albeit intermittently and through several rented relays, "
         "to delta-relay.example endpoints.",
         {EdgePayload{"BetaKit", "beacons to", "beacons-to", "delta-relay.example", "", ""}}},
        {"AlphaKit additionally drops, once operators confirm a staging window, the EpsilonLoader "
         "helper binary.",
         {EdgePayload{"AlphaKit", "drops", "drops", "EpsilonLoader", "", ""}}},
        {"EpsilonLoader patiently executes, long after initial placement activities conclude, the "
         "ZetaService worker.",
         {EdgePayload{"EpsilonLoader", "executes", "executes", "ZetaService", "", ""}}},
        {"BetaKit ultimately controls, through its secondary tasking channel and queue, the "
         "ZetaService worker too.",
         {EdgePayload{"BetaKit", "controls", "controls", "ZetaService", "", ""}}},
        {"GammaPanel silently forwards, whenever nightly reconciliation completes upstream, to "
         "delta-relay.example mirrors.",
         {EdgePayload{"GammaPanel", "forwards to", "communicates-with", "delta-relay.example", "",
                      ""}}},
    };
    std::vector<Entity> entities{
        {"AlphaKit", "hacker-tool", {"A-Kit"}, std::nullopt},
        {"BetaKit", "hacker-tool", {"B-Kit"}, std::nullopt},
        {"GammaPanel", "hacker-tool", {}, std::nullopt},
        {"delta-relay.example", "domain-name", {}, std::nullopt},
        {"EpsilonLoader", "malware", {}, std::nullopt},
        {"ZetaService", "process", {}, std::nullopt},
    };
    testing::BuiltArticle built =
        testing::build_article("strong", Source::Custom, sentences, entities);
    return {built.article, built.graph};
}

std::pair<bool, std::string> check_complexity() {
    // Single-article corpus: every rank is the mid-rank 0.5.
    {
        auto scores = score_corpus(std::vector<AlignmentPair>{dominant_pair_weak()});
        if (scores[0].c_article != 0.5 || scores[0].c_base != 0.5 || scores[0].c_graph != 0.5) {
            return {false, "single-article corpus != 0.5"};
        }
    }

    // Two-article dominance on all nine metrics: exactly 0.75 / 0.25.
    AlignmentPair strong = dominant_pair_strong();
    AlignmentPair weak = dominant_pair_weak();
    auto sm = compute_metrics(strong).values();
    auto wm = compute_metrics(weak).values();
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
        if (!(sm[k] > wm[k])) {
            return {false, std::string("fixture does not dominate on ") +
                               MetricVector::names()[k] + " (" + fmt(sm[k]) + " vs " +
                               fmt(wm[k]) + ")"};
        }
    }
    auto two = score_corpus(std::vector<AlignmentPair>{strong, weak});
    if (two[0].c_article != 0.75 || two[1].c_article != 0.25) {
        return {false, "dominance scores " + fmt(two[0].c_article) + "/" + fmt(two[1].c_article)};
    }

    // 50-article random corpus against an independent sort-based oracle.
    std::mt19937 rng(2468);
    std::vector<AlignmentPair> corpus;
    for (int i = 0; i < 50; ++i) {
        testing::BuiltArticle built = testing::random_pair(rng);
        corpus.push_back({built.article, built.graph});
    }
    auto scores = score_corpus(corpus);
    std::vector<std::array<double, 9>> rows;
    for (const AlignmentPair& pair : corpus) rows.push_back(compute_metrics(pair).values());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        double base = 0.0;
        double graph = 0.0;
        for (std::size_t k = 0; k < 9; ++k) {
            std::vector<double> column;
            for (const auto& row : rows) column.push_back(row[k]);
            std::sort(column.begin(), column.end());
            auto lo = std::lower_bound(column.begin(), column.end(), rows[i][k]);
            auto hi = std::upper_bound(column.begin(), column.end(), rows[i][k]);
            double rank = (static_cast<double>(lo - column.begin()) +
                           0.5 * static_cast<double>(hi - lo)) /
                          static_cast<double>(column.size());
            if (k < 5) base += rank;
            else graph += rank;
        }
        double expected = (base / 5.0 + graph / 4.0) / 2.0;
        if (std::abs(scores[i].c_article - expected) > 1e-12) {
            return {false, "article " + scores[i].article_id + " off oracle by " +
                               fmt(std::abs(scores[i].c_article - expected), 15)};
        }
    }

    // Strict dominance implies strict ordering: 1000 random trials.
    std::uniform_real_distribution<double> u(0.1, 3.0);
    std::uniform_int_distribution<int> extra_count(0, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::array<double, 9>> mat(2);
        for (std::size_t k = 0; k < 9; ++k) {
            mat[1][k] = u(rng);
            mat[0][k] = mat[1][k] + u(rng);
        }
        for (int e = extra_count(rng); e > 0; --e) {
            std::array<double, 9> other{};
            for (std::size_t k = 0; k < 9; ++k) other[k] = 2.0 * u(rng);
            mat.push_back(other);
        }
        std::vector<MetricVector> metrics;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < mat.size(); ++i) {
            MetricVector m;
            m.base.length_tokens = static_cast<std::size_t>(mat[i][0] * 100);
            m.base.entity_count = static_cast<std::size_t>(mat[i][1] * 100);
            m.base.relation_count = static_cast<std::size_t>(mat[i][2] * 100);
            m.base.entity_density = mat[i][3];
            m.base.relation_density = mat[i][4];
            m.graph.alias_stat = static_cast<std::size_t>(mat[i][5] * 100);
            m.graph.connectivity_stat = mat[i][6];
            m.graph.span_stat = mat[i][7];
            m.graph.crossing_stat = static_cast<std::size_t>(mat[i][8] * 100);
            metrics.push_back(m);
            ids.push_back("m" + std::to_string(i));
        }
        // Integer casts can collapse a strict gap; re-check and skip those.
        bool strict = true;
        auto a = metrics[0].values();
        auto b = metrics[1].values();
        for (std::size_t k = 0; k < 9; ++k) strict = strict && a[k] > b[k];
        if (!strict) continue;
        auto ranked = score_metric_vectors(metrics, ids);
        if (!(ranked[0].c_article > ranked[1].c_article)) {
            return {false, "dominance ordering violated at trial " + std::to_string(trial)};
        }
    }
    return {true, "0.5 exact, 0.75/0.25 exact, 50-article oracle at 1e-12, 1000 dominance trials"};
}

// ---- criterion 5 ----

std::pair<bool, std::string> check_taskbank_soundness() {
    testing::ScriptedLlm scripted;
    LlmContext ctx = testing::make_test_context(scripted);
    std::vector<Article> articles;
    for (const auto& fx : testing::fixture_corpus()) articles.push_back(fx.built.article);
    if (articles.size() != 10) return {false, "fixture corpus is not 10 articles"};

    AlignOutcome aligned = align_corpus(articles, ctx, 2);
    if (!aligned.rejects.empty()) return {false, "alignment rejected " + aligned.rejects[0].id};
    BankOutcome banks = build_bank_corpus(aligned.pairs, ctx, 20, 2);
    if (!banks.rejects.empty()) return {false, "bank rejected " + banks.rejects[0].id};
    if (banks.banks.size() != 10) return {false, "expected 10 banks"};

    bool saw_empty_answer = false;
    bool saw_full_answer = false;
    for (std::size_t i = 0; i < banks.banks.size(); ++i) {
        const TaskBank& bank = banks.banks[i];
        const AlignmentPair& pair = aligned.pairs[i];
        if (bank.choices.empty() || bank.choices.size() > 20) {
            return {false, bank.article_id + ": choice count " +
                               std::to_string(bank.choices.size())};
        }
        for (const ChoiceQuestion& q : bank.choices) {
            if (q.options.size() != 4) return {false, bank.article_id + ": option count != 4"};
            if (q.answer_set.size() > 4) return {false, bank.article_id + ": answer set > 4"};
            for (char c : q.answer_set) {
                if (c < 'A' || c > 'D') return {false, bank.article_id + ": bad answer letter"};
            }
            saw_empty_answer = saw_empty_answer || q.answer_set.empty();
            saw_full_answer = saw_full_answer || q.answer_set.size() == 4;
        }
        if (bank.regex_targets.size() != pair.graph.relations().size()) {
            return {false, bank.article_id + ": target count mismatch"};
        }
        for (std::size_t e = 0; e < bank.regex_targets.size(); ++e) {
            const Relation& edge = pair.graph.relations()[e];
            if (bank.regex_targets[e].edge_index != e) {
                return {false, bank.article_id + ": target order broken"};
            }
            if (!match_triple({edge.sub, edge.rel, edge.obj}, bank.regex_targets[e])) {
                return {false, bank.article_id + ": edge " + std::to_string(e) +
                                   " fails self-match"};
            }
        }
        if (!validate_taskbank(bank, pair).empty()) {
            return {false, bank.article_id + ": validator found violations"};
        }
    }
    if (!saw_empty_answer || !saw_full_answer) {
        return {false, "fixture banks do not cover answer sizes 0 and 4"};
    }

    auto kept = filter_benchmark(aligned.pairs, 5);
    std::vector<std::string> kept_ids;
    for (const auto& pair : kept) kept_ids.push_back(pair.article.id);
    std::vector<std::string> expected_ids = {"art01", "art02", "art03", "art04",
                                             "art05", "art06", "art07", "art08"};
    if (kept_ids != expected_ids) return {false, "filter kept the wrong set"};
    return {true, "10 banks sound; self-match complete; filter drops exactly art09 and art10"};
}

// ---- criterion 6 ----

std::pair<bool, std::string> check_span_safety() {
    std::mt19937 rng(13579);
    int detected = 0;
    const int kAnchorTrials = 100;
    const int kDeletionTrials = 100;

    for (int trial = 0; trial < kAnchorTrials; ++trial) {
        testing::BuiltArticle built = testing::random_pair(rng);
        if (!verify_anchors(built.article, built.graph).empty()) {
            return {false, "clean generated pair reports violations"};
        }
        std::uniform_int_distribution<std::size_t> pick(0, built.graph.relations().size() - 1);
        std::size_t edge = pick(rng);
        std::vector<Relation> mutated = built.graph.relations();
        AnchorField expected_field;
        switch (trial % 3) {
            case 0:
                mutated[edge].raw_sub_name = "zzqqx-absent";
                expected_field = AnchorField::SubName;
                break;
            case 1:
                mutated[edge].raw_obj_name = "zzqqx-absent";
                expected_field = AnchorField::ObjName;
                break;
            default:
                mutated[edge].raw_text_end = utf8_length(built.article.text) + 3;
                expected_field = AnchorField::Span;
                break;
        }
        auto violations =
            verify_anchors(built.article, KnowledgeGraph(built.graph.entities(), mutated));
        bool hit = false;
        for (const AnchorViolation& v : violations) {
            if (v.edge_index != edge) return {false, "violation reported on an untouched edge"};
            if (v.field == expected_field) hit = true;
        }
        if (!hit) return {false, "anchor corruption went undetected"};
        ++detected;
    }

    int deletion_done = 0;
    while (deletion_done < kDeletionTrials) {
        testing::BuiltArticle built = testing::random_pair(rng);
        Article identity = built.article;
        if (!check_protected_spans(built.article, identity, built.graph).empty()) {
            return {false, "identity revision reports violations"};
        }
        std::uniform_int_distribution<std::size_t> pick(0, built.graph.relations().size() - 1);
        std::size_t edge = pick(rng);
        const Relation& r = built.graph.relations()[edge];
        bool use_sub = pick(rng) % 2 == 0;
        const std::string& name = use_sub ? *r.raw_sub_name : *r.raw_obj_name;
        if (testing::count_occurrences(built.article.text, name) != 1) continue;

        std::string revised_text;
        for (std::size_t si = 0; si < built.sentences.size(); ++si) {
            if (si == built.edge_sentence[edge]) continue;
            if (!revised_text.empty()) revised_text += ' ';
            revised_text += built.sentences[si];
        }
        Article revised = Article::make(built.article.id, built.article.source, revised_text);
        auto violations = check_protected_spans(built.article, revised, built.graph);
        bool hit = false;
        for (const AnchorViolation& v : violations) {
            if (revised_text.find(v.expected) != std::string::npos) {
                return {false, "false positive: reported mention still present"};
            }
            if (v.edge_index == edge &&
                v.field == (use_sub ? AnchorField::SubName : AnchorField::ObjName)) {
                hit = true;
            }
        }
        if (!hit) return {false, "sentence deletion went undetected"};
        ++deletion_done;
        ++detected;
    }
    return {true, std::to_string(detected) + "/200 injected violations detected, 0 false "
                      "positives on clean fixtures"};
}

// ---- criterion 7 ----

int run_cli(const std::string& command) {
    int status = std::system(command.c_str());
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -2;
}

std::pair<bool, std::string> check_end_to_end() {
    const fs::path base = fs::temp_directory_path() / "tracekg-acceptance-e2e";
    fs::remove_all(base);
    fs::create_directories(base);
    testing::FixtureBundle bundle = testing::write_fixture_bundle(base / "fixtures");

    const std::string cli = TRACEKG_CLI_BIN;
    const std::vector<std::string> output_names = {
        "pairs.jsonl", "pairs.rejects.jsonl", "bank.jsonl",  "bank.rejects.jsonl",
        "scores.json", "ordered.jsonl",       "pred.jsonl",  "pred.rejects.jsonl",
        "report.json", "table.txt",
    };

    double slowest = 0.0;
    for (int run = 0; run < 2; ++run) {
        fs::path dir = base / ("run" + std::to_string(run));
        fs::create_directories(dir);
        auto started = std::chrono::steady_clock::now();
        const std::string mock = " --mock " + bundle.fixtures.string();
        std::vector<std::string> commands = {
            cli + " align --in " + bundle.articles5.string() + " --out " +
                (dir / "pairs.jsonl").string() + mock,
            cli + " taskbank --pairs " + (dir / "pairs.jsonl").string() + " --out " +
                (dir / "bank.jsonl").string() + mock,
            cli + " complexity --pairs " + (dir / "pairs.jsonl").string() + " --out " +
                (dir / "scores.json").string(),
            cli + " order --pairs " + (dir / "pairs.jsonl").string() + " --scores " +
                (dir / "scores.json").string() + " --out " + (dir / "ordered.jsonl").string(),
            cli + " extract --in " + bundle.articles5.string() + " --out " +
                (dir / "pred.jsonl").string() + mock,
            cli + " evaluate --pred " + (dir / "pred.jsonl").string() + " --gt " +
                (dir / "pairs.jsonl").string() + " --out " + (dir / "report.json").string() +
                " --label fixture-model" + mock,
            cli + " report --in " + (dir / "report.json").string() + " > " +
                (dir / "table.txt").string(),
        };
        for (const std::string& command : commands) {
            int code = run_cli(command + " 2>/dev/null");
            if (code != 0) {
                return {false, "exit " + std::to_string(code) + " from: " + command};
            }
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        slowest = std::max(slowest, elapsed);
        if (elapsed >= 10.0) return {false, "pipeline took " + fmt(elapsed, 2) + "s"};
    }

    for (const std::string& name : output_names) {
        std::string a = read_text_file(base / "run0" / name);
        std::string b = read_text_file(base / "run1" / name);
        if (a != b) return {false, name + " differs between runs"};
        if (name == "pairs.jsonl" || name == "bank.jsonl" || name == "pred.jsonl" ||
            name == "report.json") {
            if (a.empty()) return {false, name + " is empty"};
        }
    }
    return {true, "two runs byte-identical across 10 output files, slowest run " +
                      fmt(slowest, 2) + "s"};
}

// ---- criterion 8 ----

std::pair<bool, std::string> check_judge_integrity() {
    std::mt19937 rng(86420);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 7;
        json doc = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            doc.push_back(json{{"index", i}, {"verdict", true}, {"evidence", "q"}});
        }
        switch (trial % 4) {
            case 0: doc.erase(rng() % n); break;                       // missing index
            case 1: doc[n - 1]["index"] = 0; break;                    // duplicate index
            case 2: doc[rng() % n]["index"] = n + 1 + rng() % 3; break;  // out of range
            default: doc.push_back(doc[0]); break;                     // extra duplicate row
        }
        bool threw = false;
        try {
            parse_verdicts(doc.dump(), n, AuditKind::Precision);
        } catch (const std::exception&) {
            threw = true;
        }
        if (!threw) return {false, "mutation " + std::to_string(trial) + " accepted"};
    }

    // A failed audit surfaces in failures and leaves the aggregates untouched.
    const auto& good = testing::fixture_corpus()[1];  // art02 CASIE
    const auto& bad = testing::fixture_corpus()[7];   // art08 CTINexus
    auto article_of = [](const testing::FixtureArticle& fx) {
        return Article::make(fx.built.article.id, fx.built.article.source, fx.revised_text);
    };
    std::vector<AlignmentPair> gt{{article_of(good), good.built.graph},
                                  {article_of(bad), bad.built.graph}};
    std::vector<Prediction> preds{
        {good.built.article.id, good.built.article.source, good.predicted},
        {bad.built.article.id, bad.built.article.source, bad.predicted}};

    json good_verdicts = json::array();
    for (std::size_t i = 0; i < good.built.graph.relations().size(); ++i) {
        good_verdicts.push_back(json{{"index", i}, {"verdict", true}, {"evidence", "q"}});
    }
    // art02 precision+recall parse fine; art08 precision is malformed twice.
    testing::QueueGateway gw({good_verdicts.dump(), good_verdicts.dump(), "broken", "broken"});
    LlmContext ctx = testing::make_test_context(gw);
    EvaluationRun run = evaluate_corpus(preds, gt, ctx, 5, 1, "integrity");

    if (run.failures.size() != 1 || run.failures[0].id != bad.built.article.id) {
        return {false, "failed audit not reported"};
    }
    if (run.articles.size() != 1 || run.articles[0].id != good.built.article.id) {
        return {false, "aggregation did not exclude the failed article"};
    }
    if (run.report.per_source.size() != 1 || run.report.per_source[0].source != Source::Casie) {
        return {false, "failed article leaked into per-source aggregates"};
    }
    if (run.report.per_source[0].precision != 1.0 || run.report.avg_precision != 1.0) {
        return {false, "failed article contributed zeros to the averages"};
    }
    return {true, "200/200 mutations rejected; failed audits excluded from aggregates"};
}

}  // namespace

int main() {
    criterion(1, "published-table aggregation regression", check_table_regression);
    criterion(2, "reward exactness", check_reward_exactness);
    criterion(3, "calibration arithmetic", check_calibration);
    criterion(4, "complexity properties", check_complexity);
    criterion(5, "task-bank soundness on the 10-article replay fixture", check_taskbank_soundness);
    criterion(6, "anchor span safety under mutation", check_span_safety);
    criterion(7, "end-to-end replay determinism via the CLI", check_end_to_end);
    criterion(8, "judge-harness integrity", check_judge_integrity);
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 8 criteria passed\n");
    return 0;
}
