#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>

#include "polc/entailment.hpp"
#include "polc/fs.hpp"
#include "support/helpers.hpp"

using polc::EntailmentQuery;
using polc::parse_verdict;
using polc::ScriptedChatBackend;
using polc::Verdict;
using polc::VerdictError;

TEST_CASE("prompt layout matches the golden file", "[entailment]") {
    EntailmentQuery query;
    query.hypothesis =
        "The data-retention practice satisfies: period is \"stated\" "
        "(data is kept for an explicitly stated period)";
    // Deliberately out of order; the prompt must sort by segment index.
    query.context = {{1, "We keep your data for two years."},
                     {3, "Contact us anytime."},
                     {0, "Our policy explains everything."}};

    const std::string prompt = polc::build_prompt(query);
    const std::string golden =
        polc::read_file(testutil::golden_dir() / "entailment_prompt.txt");
    REQUIRE(prompt + "\n" == golden);
}

TEST_CASE("prompt construction validates its context", "[entailment]") {
    EntailmentQuery query;
    query.hypothesis = "Something.";
    REQUIRE_THROWS_AS(polc::build_prompt(query), polc::Error);

    query.context = {{2, "a"}, {2, "b"}};
    REQUIRE_THROWS_WITH(polc::build_prompt(query),
                        Catch::Matchers::ContainsSubstring("duplicate segment index 2"));
}

TEST_CASE("verdict parsing accepts Yes/No at a word boundary only", "[entailment]") {
    const std::set<int> ctx = {0, 1, 2, 3};

    REQUIRE(parse_verdict("Yes.", ctx).value);
    REQUIRE(parse_verdict("yes", ctx).value);
    REQUIRE(parse_verdict("YES, the policy says so.", ctx).value);
    REQUIRE(parse_verdict("  \"Yes\" — see section 2.", ctx).value);
    REQUIRE_FALSE(parse_verdict("No.", ctx).value);
    REQUIRE_FALSE(parse_verdict("'no' is the answer", ctx).value);
    REQUIRE_FALSE(parse_verdict("\n\tNo, it does not.", ctx).value);

    // Words that merely start with yes/no are not verdicts.
    REQUIRE_THROWS_AS(parse_verdict("Note that the policy is vague.", ctx), VerdictError);
    REQUIRE_THROWS_AS(parse_verdict("Yesterday's policy said so.", ctx), VerdictError);
    REQUIRE_THROWS_AS(parse_verdict("Nothing supports this.", ctx), VerdictError);
    REQUIRE_THROWS_AS(parse_verdict("Maybe.", ctx), VerdictError);
    REQUIRE_THROWS_AS(parse_verdict("", ctx), VerdictError);
    REQUIRE_THROWS_AS(parse_verdict("   \"\"  ", ctx), VerdictError);

    try {
        parse_verdict("I cannot answer that.", ctx);
        FAIL("expected VerdictError");
    } catch (const VerdictError& e) {
        REQUIRE(e.raw() == "I cannot answer that.");
    }
}

TEST_CASE("evidence extraction keeps the last complete group", "[entailment]") {
    const std::set<int> ctx = {0, 1, 2, 3, 5, 7};

    REQUIRE(parse_verdict("Yes. Evidence:[2,3,7]", ctx).evidence ==
            std::vector<int>{2, 3, 7});
    REQUIRE(parse_verdict("Yes. evidence : [3 , 1]", ctx).evidence == std::vector<int>{1, 3});
    REQUIRE(parse_verdict("Yes. EVIDENCE:[2]", ctx).evidence == std::vector<int>{2});
    REQUIRE(parse_verdict("No answer found... no. - Evidence:[5]", ctx).evidence ==
            std::vector<int>{5});

    // A later group supersedes an earlier one.
    REQUIRE(parse_verdict("Yes. Evidence:[1] but really Evidence:[2,5]", ctx).evidence ==
            std::vector<int>{2, 5});
    // An unclosed group does not supersede a complete one.
    REQUIRE(parse_verdict("Yes. Evidence:[3] Evidence:[1", ctx).evidence ==
            std::vector<int>{3});
    // No group at all: empty evidence.
    REQUIRE(parse_verdict("Yes, clearly.", ctx).evidence.empty());
    // Explicitly empty group.
    REQUIRE(parse_verdict("Yes. Evidence:[]", ctx).evidence.empty());
    // Junk inside the brackets is skipped, digits are kept.
    REQUIRE(parse_verdict("Yes. Evidence:[source 2; id 5]", ctx).evidence ==
            std::vector<int>{2, 5});
    // Duplicates collapse.
    REQUIRE(parse_verdict("Yes. Evidence:[2,2,2]", ctx).evidence == std::vector<int>{2});
    // Absurdly long digit runs are junk, not segment ids.
    REQUIRE(parse_verdict("Yes. Evidence:[12345678901]", ctx).evidence.empty());
}

TEST_CASE("cited ids outside the context are dropped and counted", "[entailment]") {
    const Verdict verdict = parse_verdict("No. Evidence:[1,9,42]", {0, 1});
    REQUIRE_FALSE(verdict.value);
    REQUIRE(verdict.evidence == std::vector<int>{1});
    REQUIRE(verdict.dropped_evidence == 2);
    REQUIRE(verdict.raw == "No. Evidence:[1,9,42]");
}

TEST_CASE("verdict parsing survives fuzzing", "[entailment]") {
    testutil::Rng rng(0xFEED);
    const std::set<int> ctx = {0, 1, 2};
    int parsed = 0;
    int rejected = 0;
    for (int round = 0; round < 2000; ++round) {
        std::string raw;
        const std::size_t length = rng.bounded(60);
        for (std::size_t i = 0; i < length; ++i) {
            raw.push_back(static_cast<char>(rng.bounded(256)));
        }
        try {
            parse_verdict(raw, ctx);
            ++parsed;
        } catch (const VerdictError&) {
            ++rejected;
        }
    }
    REQUIRE(parsed + rejected == 2000);

    // Structured fuzz: verdict prefixes with noisy evidence tails.
    const std::vector<std::string> prefixes = {"Yes", "No", "yes,", "No.", "Maybe", "Y", "Non"};
    for (int round = 0; round < 2000; ++round) {
        std::string raw = prefixes[rng.bounded(prefixes.size())];
        raw += " Evidence:";
        const std::size_t length = rng.bounded(20);
        for (std::size_t i = 0; i < length; ++i) {
            raw.push_back("[]0123456789,; "[rng.bounded(15)]);
        }
        try {
            const Verdict v = parse_verdict(raw, ctx);
            for (int id : v.evidence) REQUIRE(ctx.count(id) == 1);
        } catch (const VerdictError&) {
        }
    }
}

TEST_CASE("scripted backend answers by policy marker and hypothesis", "[entailment]") {
    ScriptedChatBackend backend("svc[0-9]+");
    backend.add_answer("svc7", "The data is retained.", {true, {1}});
    backend.add_answer("svc8", "The data is retained.", {false, {}});

    EntailmentQuery query;
    query.hypothesis = "The data is retained.";
    query.context = {{0, "Welcome to svc7."}, {1, "svc7 keeps data for a year."}};

    const Verdict yes = polc::entail(backend, query);
    REQUIRE(yes.value);
    REQUIRE(yes.evidence == std::vector<int>{1});
    REQUIRE(backend.calls() == 1);

    // Same statement, different policy: the marker distinguishes them.
    query.context = {{0, "Welcome to svc8."}, {1, "svc8 deletes data immediately."}};
    const Verdict no = polc::entail(backend, query);
    REQUIRE_FALSE(no.value);
    REQUIRE(backend.calls() == 2);

    // Unknown (policy, statement) pairs fail loudly.
    query.hypothesis = "Something never scripted.";
    REQUIRE_THROWS_WITH(polc::entail(backend, query),
                        Catch::Matchers::ContainsSubstring("Something never scripted."));
}

TEST_CASE("hypothesis recovery tolerates question-like policy text", "[entailment]") {
    // The policy itself contains the question phrase; the extractor must key
    // on the final occurrence, which is the one build_prompt wrote.
    EntailmentQuery query;
    query.hypothesis = "The statement to check.";
    query.context = {
        {0, "FAQ: according to the Privacy Policy X, is the following statement True? Who knows."}};
    const std::string prompt = polc::build_prompt(query);
    REQUIRE(ScriptedChatBackend::extract_hypothesis(prompt) == "The statement to check.");
}
