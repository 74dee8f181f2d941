#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "polc/digest.hpp"
#include "polc/retrieval.hpp"
#include "support/helpers.hpp"

using polc::BagOfWordsEmbedder;
using polc::build_index;
using polc::retrieve;
using polc::ScoredSegment;
using polc::Segment;
using polc::VectorIndex;

namespace {

std::vector<Segment> make_segments(const std::vector<std::string>& texts) {
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        segments.push_back(
            {static_cast<int>(i), texts[i], static_cast<int>(polc::token_count(texts[i]))});
    }
    return segments;
}

/// Reference top-k: repeated linear max-selection instead of a sort.
std::vector<ScoredSegment> reference_topk(const VectorIndex& index,
                                          const std::vector<double>& query, int k) {
    std::vector<ScoredSegment> all;
    for (const auto& [segment, row] : index.rows) {
        double dot = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) dot += row[i] * query[i];
        all.push_back({segment, dot});
    }
    std::vector<ScoredSegment> picked;
    std::vector<bool> used(all.size(), false);
    while (static_cast<int>(picked.size()) < k && picked.size() < all.size()) {
        std::size_t best = all.size();
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (used[i]) continue;
            if (best == all.size() || all[i].score > all[best].score ||
                (all[i].score == all[best].score && all[i].segment < all[best].segment)) {
                best = i;
            }
        }
        used[best] = true;
        picked.push_back(all[best]);
    }
    return picked;
}

}  // namespace

TEST_CASE("bag-of-words embedding follows its published definition", "[retrieval]") {
    const int dimension = 8;
    BagOfWordsEmbedder embedder(dimension);
    REQUIRE(embedder.id() == "mock-bow-8");
    REQUIRE(embedder.dimension() == 8);

    // Tokens are lowercased and stripped of outer punctuation, then counted in
    // bucket fnv1a64(token) % dimension and L2-normalized.
    const auto vec = embedder.embed("The cat, the (hat)!");
    std::vector<double> expected(dimension, 0.0);
    for (const std::string& token : {"the", "cat", "the", "hat"}) {
        expected[polc::fnv1a64(token) % dimension] += 1.0;
    }
    double norm = 0.0;
    for (double c : expected) norm += c * c;
    norm = std::sqrt(norm);
    for (double& c : expected) c /= norm;
    REQUIRE(vec == expected);

    // Order-insensitive by construction.
    REQUIRE(embedder.embed("cat the hat the") == vec);

    // Purely non-alphanumeric input has no tokens; the zero vector maps to e0.
    const auto zero = embedder.embed("!!! --- ???");
    REQUIRE(zero[0] == 1.0);
    for (std::size_t i = 1; i < zero.size(); ++i) REQUIRE(zero[i] == 0.0);

    // Unit norm on real text.
    double sum = 0.0;
    for (double c : embedder.embed("we retain your data for two years")) sum += c * c;
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));

    REQUIRE_THROWS_AS(BagOfWordsEmbedder(0), polc::Error);
}

TEST_CASE("retrieval matches the reference selection on random corpora", "[retrieval]") {
    testutil::Rng rng(271828);
    const std::vector<std::string> vocab = {"data",   "retain", "share",  "delete", "user",
                                            "cookie", "email",  "policy", "third",  "party"};
    BagOfWordsEmbedder embedder(16);

    for (int round = 0; round < 40; ++round) {
        std::vector<std::string> texts;
        const std::size_t count = 1 + rng.bounded(30);
        for (std::size_t i = 0; i < count; ++i) {
            std::string text;
            const std::size_t words = 1 + rng.bounded(8);
            for (std::size_t w = 0; w < words; ++w) {
                if (w > 0) text += ' ';
                text += vocab[rng.bounded(vocab.size())];
            }
            texts.push_back(text);
        }
        const VectorIndex index = build_index(make_segments(texts), embedder);

        std::string query;
        for (std::size_t w = 0; w < 3; ++w) {
            if (w > 0) query += ' ';
            query += vocab[rng.bounded(vocab.size())];
        }
        const int k = 1 + static_cast<int>(rng.bounded(10));

        const auto got = retrieve(index, query, k, embedder);
        const auto expected = reference_topk(index, embedder.embed(query), k);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].segment == expected[i].segment);
            REQUIRE_THAT(got[i].score, Catch::Matchers::WithinAbs(expected[i].score, 1e-12));
        }
    }
}

TEST_CASE("retrieval breaks score ties by ascending segment index", "[retrieval]") {
    BagOfWordsEmbedder embedder(16);
    // Three identical segments and one unrelated one.
    const VectorIndex index = build_index(
        make_segments({"we retain data", "cookies are used", "we retain data", "we retain data"}),
        embedder);
    const auto hits = retrieve(index, "retain data", 3, embedder);
    REQUIRE(hits.size() == 3);
    REQUIRE(hits[0].segment == 0);
    REQUIRE(hits[1].segment == 2);
    REQUIRE(hits[2].segment == 3);
    REQUIRE(hits[0].score == hits[1].score);
    REQUIRE(hits[1].score == hits[2].score);
}

TEST_CASE("retrieval validates its inputs", "[retrieval]") {
    BagOfWordsEmbedder embedder(8);
    const VectorIndex index = build_index(make_segments({"a b", "c d"}), embedder);

    REQUIRE(retrieve(index, "a", 10, embedder).size() == 2);  // k larger than the corpus
    REQUIRE_THROWS_AS(retrieve(index, "a", 0, embedder), polc::Error);

    BagOfWordsEmbedder other(16);
    REQUIRE_THROWS_WITH(retrieve(index, "a", 1, other),
                        Catch::Matchers::ContainsSubstring("mock-bow-8"));

    std::vector<Segment> dup = make_segments({"a", "b"});
    dup[1].index = 0;
    REQUIRE_THROWS_AS(build_index(dup, embedder), polc::Error);
}

TEST_CASE("vector index files round-trip exactly", "[retrieval]") {
    testutil::TempDir tmp;
    BagOfWordsEmbedder embedder(12);
    const VectorIndex index = build_index(
        make_segments({"we retain your data", "for two years", "then delete it"}), embedder);

    const auto path = tmp.path() / "index.json";
    polc::save_index(index, path);
    const VectorIndex loaded = polc::load_index(path);
    REQUIRE(loaded == index);

    // Serializing the loaded index reproduces the file byte for byte; doubles
    // survive the JSON round trip unchanged.
    const auto again = tmp.path() / "again.json";
    polc::save_index(loaded, again);
    REQUIRE(polc::read_file(path) == polc::read_file(again));
}

TEST_CASE("vector index loading rejects corrupt files", "[retrieval]") {
    testutil::TempDir tmp;
    BagOfWordsEmbedder embedder(4);
    const VectorIndex index = build_index(make_segments({"a b c"}), embedder);
    const auto path = tmp.path() / "index.json";

    const auto corrupt = [&](auto mutate) {
        polc::Json doc = polc::index_to_json(index);
        mutate(doc);
        polc::write_file(path, doc.dump());
        REQUIRE_THROWS_AS(polc::load_index(path), polc::SchemaError);
    };

    corrupt([](polc::Json& doc) { doc["magic"] = "something-else"; });
    corrupt([](polc::Json& doc) { doc["format_version"] = 99; });
    corrupt([](polc::Json& doc) { doc["rows"][0]["components"].push_back(0.5); });
    corrupt([](polc::Json& doc) { doc["count"] = 7; });
    corrupt([](polc::Json& doc) { doc["rows"].push_back(doc["rows"][0]); });

    polc::write_file(path, "not json at all");
    REQUIRE_THROWS_AS(polc::load_index(path), polc::SchemaError);
}

TEST_CASE("neighbor expansion clamps, deduplicates, and sorts", "[retrieval]") {
    using polc::expand_neighbors;
    REQUIRE(expand_neighbors({}, 10) == std::vector<int>{});
    REQUIRE(expand_neighbors({0}, 1) == std::vector<int>{0});
    REQUIRE(expand_neighbors({2}, 6) == std::vector<int>{1, 2, 3});
    REQUIRE(expand_neighbors({0, 5}, 6) == std::vector<int>{0, 1, 4, 5});
    REQUIRE(expand_neighbors({3, 4}, 10) == std::vector<int>{2, 3, 4, 5});
    REQUIRE(expand_neighbors({9}, 10) == std::vector<int>{8, 9});
    REQUIRE(expand_neighbors({5, 1, 5}, 10) == std::vector<int>{0, 1, 2, 4, 5, 6});
    REQUIRE_THROWS_AS(expand_neighbors({10}, 10), polc::Error);
    REQUIRE_THROWS_AS(expand_neighbors({-1}, 10), polc::Error);
}
