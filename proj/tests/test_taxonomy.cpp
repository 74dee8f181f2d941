#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "polc/taxonomy.hpp"
#include "support/helpers.hpp"

using polc::AtomicFormula;
using polc::SchemaError;
using polc::Taxonomy;

namespace {

Taxonomy load_shipped(const char* name) {
    return Taxonomy::load_file(testutil::data_dir() / "taxonomy" / name);
}

std::vector<std::string> ids_of(const std::vector<AtomicFormula>& atomics) {
    std::vector<std::string> ids;
    ids.reserve(atomics.size());
    for (const auto& atomic : atomics) ids.push_back(atomic.id);
    return ids;
}

}  // namespace

TEST_CASE("shipped taxonomies load and fingerprints are stable", "[taxonomy]") {
    const Taxonomy toy = load_shipped("toy.json");
    REQUIRE(toy.categories().size() == 1);
    REQUIRE(toy.categories()[0].name == "data-retention");
    REQUIRE(toy.categories()[0].attributes.size() == 3);
    REQUIRE(toy.fingerprint().size() == 16);

    // Same file, same fingerprint; a changed description changes it.
    const Taxonomy again = load_shipped("toy.json");
    REQUIRE(toy.fingerprint() == again.fingerprint());

    polc::Json doc = polc::Json::parse(polc::read_file(testutil::data_dir() / "taxonomy/toy.json"));
    doc["categories"][0]["attributes"][0]["values"][0]["description"] = "something else";
    REQUIRE(Taxonomy::from_json(doc).fingerprint() != toy.fingerprint());
}

TEST_CASE("identifiers are normalized to lowercase kebab-case", "[taxonomy]") {
    polc::Json doc = {
        {"categories",
         {{{"name", "Data Retention"},
           {"attributes",
            {{{"name", "Retention Period"},
              {"values",
               {{{"value", "Stated Period"}, {"description", "kept for a stated period"}},
                {{"value", "INDEFINITE"}, {"description", "kept forever"}}}}}}}}}}};
    const Taxonomy taxonomy = Taxonomy::from_json(doc);
    REQUIRE(taxonomy.categories()[0].name == "data-retention");
    REQUIRE(taxonomy.categories()[0].attributes[0].name == "retention-period");
    REQUIRE(taxonomy.categories()[0].attributes[0].domain[0].value == "stated-period");
    REQUIRE(taxonomy.categories()[0].attributes[0].domain[1].value == "indefinite");
}

TEST_CASE("taxonomy validation rejects malformed documents", "[taxonomy]") {
    const auto base = [] {
        return polc::Json::parse(polc::read_file(testutil::data_dir() / "taxonomy/toy.json"));
    };

    SECTION("empty category list") {
        polc::Json doc = base();
        doc["categories"] = polc::Json::array();
        REQUIRE_THROWS_AS(Taxonomy::from_json(doc), SchemaError);
    }
    SECTION("duplicate category name") {
        polc::Json doc = base();
        doc["categories"].push_back(doc["categories"][0]);
        REQUIRE_THROWS_WITH(Taxonomy::from_json(doc),
                            Catch::Matchers::ContainsSubstring("duplicate category"));
    }
    SECTION("duplicate attribute name") {
        polc::Json doc = base();
        doc["categories"][0]["attributes"].push_back(doc["categories"][0]["attributes"][0]);
        REQUIRE_THROWS_WITH(Taxonomy::from_json(doc),
                            Catch::Matchers::ContainsSubstring("duplicate attribute"));
    }
    SECTION("duplicate value") {
        polc::Json doc = base();
        doc["categories"][0]["attributes"][0]["values"].push_back(
            doc["categories"][0]["attributes"][0]["values"][0]);
        REQUIRE_THROWS_WITH(Taxonomy::from_json(doc),
                            Catch::Matchers::ContainsSubstring("duplicate value"));
    }
    SECTION("single-value domain") {
        polc::Json doc = base();
        doc["categories"][0]["attributes"][0]["values"] = polc::Json::array();
        doc["categories"][0]["attributes"][0]["values"].push_back(
            polc::Json{{"value", "only"}, {"description", "the only value"}});
        REQUIRE_THROWS_WITH(Taxonomy::from_json(doc),
                            Catch::Matchers::ContainsSubstring("at least 2 values"));
    }
    SECTION("empty description") {
        polc::Json doc = base();
        doc["categories"][0]["attributes"][0]["values"][0]["description"] = "   ";
        REQUIRE_THROWS_AS(Taxonomy::from_json(doc), SchemaError);
    }
    SECTION("unnormalizable identifier") {
        polc::Json doc = base();
        doc["categories"][0]["name"] = "###";
        REQUIRE_THROWS_AS(Taxonomy::from_json(doc), SchemaError);
    }
    SECTION("error reports the JSON path") {
        polc::Json doc = base();
        doc["categories"][0]["attributes"][1]["values"][2].erase("description");
        try {
            Taxonomy::from_json(doc);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            REQUIRE_THAT(e.path(), Catch::Matchers::ContainsSubstring(
                                       "categories[0].attributes[1].values[2]"));
        }
    }
}

TEST_CASE("atomic generation counts match hand-computed values", "[taxonomy]") {
    const Taxonomy toy = load_shipped("toy.json");
    // Domains are 4 x 5 x 3.
    REQUIRE(polc::generate_atomics(toy).size() == 60);
    REQUIRE(polc::generate_atomics(toy, 2).size() == 4 * 5 + 4 * 3 + 5 * 3);  // 47
    REQUIRE(polc::generate_atomics(toy, 1).size() == 4 + 5 + 3);              // 12
    REQUIRE(polc::generate_atomics(toy, 7).size() == 60);  // cap above the attribute count

    const Taxonomy wide = load_shipped("three-by-ten.json");
    REQUIRE(polc::generate_atomics(wide).size() == 1000);
    REQUIRE(polc::generate_atomics(wide, 2).size() == 300);
    REQUIRE(polc::generate_atomics(wide, 1).size() == 30);

    const Taxonomy mini = load_shipped("opp115-mini.json");
    REQUIRE(polc::generate_atomics(mini).size() == 60 + 4 + 2 + 3);
    REQUIRE(polc::generate_atomics(mini, 1).size() == 12 + 4 + 2 + 3);

    REQUIRE_THROWS_AS(polc::generate_atomics(toy, 0), polc::Error);
}

TEST_CASE("atomic generation order is deterministic and documented", "[taxonomy]") {
    const Taxonomy toy = load_shipped("toy.json");
    const auto atomics = polc::generate_atomics(toy, 2);
    // First subset is (period, purpose); the last attribute varies fastest.
    REQUIRE(atomics[0].id == "data-retention(period=indefinite,purpose=advertising)");
    REQUIRE(atomics[1].id == "data-retention(period=indefinite,purpose=analytics)");
    REQUIRE(atomics[5].id == "data-retention(period=stated,purpose=advertising)");
    // After 4*5 entries the subset switches to (period, type).
    REQUIRE(atomics[20].id == "data-retention(period=indefinite,type=location)");
    // Then (purpose, type).
    REQUIRE(atomics[32].id == "data-retention(purpose=advertising,type=location)");
}

TEST_CASE("atomic ids round-trip through parse_atomic_id", "[taxonomy]") {
    const Taxonomy toy = load_shipped("toy.json");
    for (const auto& atomic : polc::generate_atomics(toy, 2)) {
        const AtomicFormula parsed = polc::parse_atomic_id(atomic.id);
        REQUIRE(parsed == atomic);
        REQUIRE(parsed.id == atomic.id);
        REQUIRE_NOTHROW(polc::validate_atomic(toy, parsed));
    }
}

TEST_CASE("parse_atomic_id rejects non-canonical ids", "[taxonomy]") {
    REQUIRE_THROWS_AS(polc::parse_atomic_id("data-retention"), SchemaError);
    REQUIRE_THROWS_AS(polc::parse_atomic_id("data-retention()"), SchemaError);
    REQUIRE_THROWS_AS(polc::parse_atomic_id("data-retention(period)"), SchemaError);
    REQUIRE_THROWS_AS(polc::parse_atomic_id("data-retention(period=stated "), SchemaError);
    REQUIRE_THROWS_AS(polc::parse_atomic_id("data-retention(period = stated)"), SchemaError);
    REQUIRE_THROWS_AS(polc::parse_atomic_id("Data-Retention(period=stated)"), SchemaError);
    REQUIRE_THROWS_AS(polc::parse_atomic_id("data-retention(period=stated,)"), SchemaError);
}

TEST_CASE("validate_atomic enforces taxonomy order and known names", "[taxonomy]") {
    const Taxonomy toy = load_shipped("toy.json");

    // Out of taxonomy order: purpose comes after period.
    AtomicFormula out_of_order;
    out_of_order.category = "data-retention";
    out_of_order.bindings = {{"purpose", "legal"}, {"period", "stated"}};
    out_of_order.id = polc::canonical_atomic_id(out_of_order.category, out_of_order.bindings);
    REQUIRE_THROWS_WITH(polc::validate_atomic(toy, out_of_order),
                        Catch::Matchers::ContainsSubstring("out of taxonomy order"));

    AtomicFormula repeated = out_of_order;
    repeated.bindings = {{"period", "stated"}, {"period", "limited"}};
    repeated.id = polc::canonical_atomic_id(repeated.category, repeated.bindings);
    REQUIRE_THROWS_AS(polc::validate_atomic(toy, repeated), SchemaError);

    AtomicFormula unknown_value = out_of_order;
    unknown_value.bindings = {{"period", "forever"}};
    unknown_value.id = polc::canonical_atomic_id(unknown_value.category, unknown_value.bindings);
    REQUIRE_THROWS_WITH(polc::validate_atomic(toy, unknown_value),
                        Catch::Matchers::ContainsSubstring("not in domain"));

    AtomicFormula unknown_category = out_of_order;
    unknown_category.category = "no-such-category";
    unknown_category.bindings = {{"period", "stated"}};
    REQUIRE_THROWS_AS(polc::validate_atomic(toy, unknown_category), SchemaError);
}

TEST_CASE("generated atomics agree with the reference enumerator", "[taxonomy]") {
    testutil::Rng rng(20240811);
    for (int round = 0; round < 25; ++round) {
        const Taxonomy taxonomy = testutil::random_taxonomy(rng);
        std::optional<int> cap;
        if (rng.coin()) cap = 1 + static_cast<int>(rng.bounded(4));
        const auto ids = ids_of(polc::generate_atomics(taxonomy, cap));
        const auto expected = testutil::reference_atomic_ids(taxonomy, cap);
        REQUIRE(ids == expected);
        // Ids are unique.
        REQUIRE(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size());
    }
}
