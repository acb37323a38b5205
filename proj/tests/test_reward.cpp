#include <doctest.h>

#include <random>

#include "tracekg/reward.hpp"

using namespace tracekg;

TEST_CASE("parse_choice_output follows the answer-line grammar") {
    auto full = parse_choice_output("The text supports A and C.\nAnswer: A,C");
    CHECK(full.answers == std::set<char>{'A', 'C'});
    CHECK(full.format_ok);

    auto no_reasoning = parse_choice_output("Answer: A");
    CHECK(no_reasoning.answers == std::set<char>{'A'});
    CHECK(!no_reasoning.format_ok);

    auto messy = parse_choice_output("I think A.\nanswer: c, a, a");
    CHECK(messy.answers == std::set<char>{'A', 'C'});
    CHECK(messy.format_ok);

    auto none = parse_choice_output("Nothing fits.\nAnswer: none");
    CHECK(none.answers.empty());
    CHECK(none.format_ok);

    auto missing = parse_choice_output("No final line at all.");
    CHECK(missing.answers.empty());
    CHECK(!missing.format_ok);

    // The answer line must be final.
    auto mid = parse_choice_output("Answer: B\nsome trailing commentary");
    CHECK(mid.answers.empty());
    CHECK(!mid.format_ok);

    auto bad_letter = parse_choice_output("reasoning\nAnswer: A,E");
    CHECK(bad_letter.answers.empty());
    CHECK(!bad_letter.format_ok);

    auto trailing_blank = parse_choice_output("reasoning\nAnswer: b, d\n\n");
    CHECK(trailing_blank.answers == std::set<char>{'B', 'D'});
    CHECK(trailing_blank.format_ok);
}

TEST_CASE("parse_regex_output takes triples from the last fenced block") {
    const std::string good =
        "I found two facts.\n```json\n"
        R"([{"sub":"Emotet","rel":"drops","obj":"TrickBot"},)"
        R"({"sub":"TrickBot","rel":"beacons to","obj":"c2.example"}])" "\n```\n";
    auto parsed = parse_regex_output(good);
    REQUIRE(parsed.triples.size() == 2);
    CHECK(parsed.triples[0].sub == "Emotet");
    CHECK(parsed.format_ok);

    const std::string block_only =
        "```json\n" R"([{"sub":"a","rel":"b","obj":"c"}])" "\n```";
    auto bare = parse_regex_output(block_only);
    CHECK(bare.triples.size() == 1);
    CHECK(!bare.format_ok);

    const std::string two_blocks =
        "thinking\n```json\n" R"([{"sub":"old","rel":"x","obj":"y"}])" "\n```\n"
        "revised\n```json\n" R"([{"sub":"new","rel":"x","obj":"y"}])" "\n```";
    auto last = parse_regex_output(two_blocks);
    REQUIRE(last.triples.size() == 1);
    CHECK(last.triples[0].sub == "new");
    CHECK(last.format_ok);

    auto malformed = parse_regex_output("reasoning\n```json\n[{\"sub\": broken\n```");
    CHECK(malformed.triples.empty());
    CHECK(!malformed.format_ok);

    auto no_block = parse_regex_output("just prose, no fences");
    CHECK(no_block.triples.empty());
    CHECK(!no_block.format_ok);
}

TEST_CASE("choice_reward matches the exact/overlap/otherwise rule") {
    CHECK(choice_reward({'A', 'C'}, {'A', 'C'}) == 1.0);
    CHECK(choice_reward({}, {}) == 1.0);
    CHECK(choice_reward({'A'}, {'A', 'C'}) == 0.5);
    CHECK(choice_reward({'B', 'D'}, {'A', 'C'}) == 0.0);
    CHECK(choice_reward({}, {'A'}) == 0.0);
    CHECK(choice_reward({'A'}, {}) == 0.0);
}

TEST_CASE("choice_reward is reflexive on every subset") {
    for (int mask = 0; mask < 16; ++mask) {
        std::set<char> s;
        for (int b = 0; b < 4; ++b) {
            if (mask & (1 << b)) s.insert(static_cast<char>('A' + b));
        }
        CHECK(choice_reward(s, s) == 1.0);
    }
}

TEST_CASE("regex_reward is n_match over n_gt") {
    std::vector<RegexTarget> targets;
    for (std::size_t i = 0; i < 5; ++i) {
        targets.push_back({"demo", i, "sub" + std::to_string(i), "rel", "obj"});
    }
    std::vector<Triple> pred{{"sub0", "rel", "obj"}, {"sub2", "rel", "obj"},
                             {"sub4", "rel", "obj"}, {"nomatch", "rel", "obj"}};
    auto result = regex_reward(pred, targets);
    CHECK(result.reward == doctest::Approx(0.6));
    CHECK(result.matched == std::vector<std::size_t>{0, 2, 4});

    CHECK(regex_reward({}, targets).reward == 0.0);
    CHECK_THROWS_AS(regex_reward(pred, {}), EmptyTargets);
}

TEST_CASE("regex_reward equals the brute-force double loop on random cases") {
    std::mt19937 rng(8080);
    std::uniform_int_distribution<int> n_targets(1, 6);
    std::uniform_int_distribution<int> n_pred(0, 6);
    std::uniform_int_distribution<int> vocab(0, 4);
    auto word = [&](int v) { return "w" + std::to_string(v); };

    for (int trial = 0; trial < 500; ++trial) {
        std::vector<RegexTarget> targets;
        int nt = n_targets(rng);
        for (int i = 0; i < nt; ++i) {
            targets.push_back({"demo", static_cast<std::size_t>(i), word(vocab(rng)),
                               word(vocab(rng)), word(vocab(rng))});
        }
        std::vector<Triple> pred;
        int np = n_pred(rng);
        for (int i = 0; i < np; ++i) {
            pred.push_back({word(vocab(rng)), word(vocab(rng)), word(vocab(rng))});
        }

        std::size_t expected = 0;
        for (const RegexTarget& t : targets) {
            bool hit = false;
            for (const Triple& p : pred) {
                hit = hit || (normalize(p.sub) == t.sub_pattern &&
                              normalize(p.rel) == t.rel_pattern &&
                              normalize(p.obj) == t.obj_pattern);
            }
            if (hit) ++expected;
        }
        auto result = regex_reward(pred, targets);
        CHECK(result.reward ==
              doctest::Approx(static_cast<double>(expected) / static_cast<double>(nt)));
        CHECK(result.matched.size() == expected);
    }
}

TEST_CASE("regex_reward never decreases when predictions are added") {
    std::vector<RegexTarget> targets{{"demo", 0, "alpha", "uses", "beta"},
                                     {"demo", 1, "gamma", "drops", "delta"}};
    std::vector<Triple> pred;
    double prev = regex_reward(pred, targets).reward;
    for (const Triple& t : {Triple{"x", "y", "z"}, Triple{"alpha", "uses", "beta"},
                            Triple{"q", "r", "s"}, Triple{"gamma", "drops", "delta"}}) {
        pred.push_back(t);
        double now = regex_reward(pred, targets).reward;
        CHECK(now >= prev);
        prev = now;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("score_rollout adds the 0.1 format bonus on top of the main reward") {
    ChoiceQuestion q;
    q.article_id = "demo";
    q.options = {"a — b — c", "d — e — f", "g — h — i", "j — k — l"};
    q.answer_set = {'A', 'C'};

    RewardBreakdown perfect = score_rollout(q, "Both A and C hold.\nAnswer: A,C");
    CHECK(perfect.main == 1.0);
    CHECK(perfect.format_bonus == 0.1);
    CHECK(perfect.total == doctest::Approx(1.1));

    RewardBreakdown no_reasoning = score_rollout(q, "Answer: A,C");
    CHECK(no_reasoning.main == 1.0);
    CHECK(no_reasoning.format_bonus == 0.0);
    CHECK(no_reasoning.total == doctest::Approx(1.0));

    RewardBreakdown garbage = score_rollout(q, "I refuse to answer in the required format");
    CHECK(garbage.total == 0.0);

    RegexTask task;
    task.article_id = "demo";
    task.targets = {{"demo", 0, "emotet", "drops", "trickbot"}};
    RewardBreakdown regex_perfect = score_rollout(
        task, "Found it.\n```json\n[{\"sub\":\"Emotet\",\"rel\":\"drops\",\"obj\":\"TrickBot\"}]\n```");
    CHECK(regex_perfect.main == 1.0);
    CHECK(regex_perfect.total == doctest::Approx(1.1));
    CHECK(regex_perfect.detail["n_gt"] == 1);

    RewardBreakdown regex_garbage = score_rollout(task, "no block");
    CHECK(regex_garbage.total == 0.0);
}

TEST_CASE("rollout parsers never throw on arbitrary text") {
    std::mt19937 rng(777);
    std::uniform_int_distribution<int> len(0, 80);
    const std::string alphabet = "Answer:abcd,`{}[]\"\n none\tsubrelobj\\";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        for (int i = 0, n = len(rng); i < n; ++i) s.push_back(alphabet[pick(rng)]);
        AnswerParse a = parse_choice_output(s);
        for (char c : a.answers) CHECK((c >= 'A' && c <= 'D'));
        (void)parse_regex_output(s);
    }
}

TEST_CASE("totals always stay within [0, 1.1]") {
    std::mt19937 rng(1212);
    ChoiceQuestion q;
    q.article_id = "demo";
    q.options = {"a — b — c", "d — e — f", "g — h — i", "j — k — l"};
    q.answer_set = {'B'};
    const std::vector<std::string> outputs = {
        "", "Answer: B", "blah\nAnswer: B", "blah\nAnswer: none", "blah\nanswer: a,b,c,d",
        "no answer at all", "x\nAnswer: Q", "```json\n[]\n```",
    };
    for (const std::string& out : outputs) {
        RewardBreakdown b = score_rollout(q, out);
        CHECK(b.total >= 0.0);
        CHECK(b.total <= 1.1);
        CHECK(b.total == doctest::Approx(b.format_bonus + b.main));
    }
}
