#pragma once

// Shared fixtures and reference implementations for the test suite. The
// reference ("oracle") functions here are deliberately written from scratch —
// straightforward, slow, and structurally different from the library code they
// check — so that agreement between the two is meaningful.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polc/logic.hpp"
#include "polc/taxonomy.hpp"
#include "polc/truth_table.hpp"

namespace testutil {

/// Deterministic test-case generator. std::mt19937_64's raw output sequence is
/// fully specified by the standard, so drawing through % keeps every test
/// reproducible across platforms (the standard *distributions* are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform-ish draw from [0, bound); bound must be positive.
    std::size_t bounded(std::size_t bound) { return static_cast<std::size_t>(next() % bound); }

    bool coin() { return (next() & 1u) != 0; }

private:
    std::mt19937_64 engine_;
};

/// Builds a truth table directly from (atomic id, value) pairs.
inline polc::TruthTable make_table(std::string policy_id, std::string fingerprint,
                                   const std::vector<std::pair<std::string, bool>>& values) {
    polc::TruthTable table;
    table.policy_id = std::move(policy_id);
    table.taxonomy_fingerprint = std::move(fingerprint);
    table.backend_id = "test";
    table.embedder_id = "test";
    table.k = 1;
    for (const auto& [id, value] : values) {
        polc::TableEntry entry;
        entry.value = value;
        table.entries.emplace(id, std::move(entry));
    }
    return table;
}

/// Reference formula interpreter: plain recursive bool evaluation over an
/// environment map. Predicates are unsupported on purpose — evaluation is only
/// defined after desugaring.
inline bool eval_reference(const polc::Formula& f, const std::map<std::string, bool>& env) {
    using Kind = polc::Formula::Kind;
    switch (f.kind()) {
        case Kind::Atom:
            return env.at(f.atom_id());
        case Kind::Predicate:
            throw std::logic_error("reference interpreter got a predicate");
        case Kind::Not:
            return !eval_reference(f.children().front(), env);
        case Kind::And:
            for (const auto& child : f.children()) {
                if (!eval_reference(child, env)) return false;
            }
            return true;
        case Kind::Or:
            for (const auto& child : f.children()) {
                if (eval_reference(child, env)) return true;
            }
            return false;
    }
    throw std::logic_error("unreachable");
}

/// Random formula over the given atom ids, depth-bounded.
inline polc::Formula random_formula(Rng& rng, const std::vector<std::string>& atom_ids, int depth) {
    if (depth <= 0 || rng.bounded(4) == 0) {
        return polc::Formula::atom(atom_ids[rng.bounded(atom_ids.size())]);
    }
    switch (rng.bounded(3)) {
        case 0:
            return polc::Formula::negation_of(random_formula(rng, atom_ids, depth - 1));
        case 1: {
            std::vector<polc::Formula> children;
            const std::size_t n = 2 + rng.bounded(2);
            for (std::size_t i = 0; i < n; ++i) {
                children.push_back(random_formula(rng, atom_ids, depth - 1));
            }
            return polc::Formula::conjunction_of(std::move(children));
        }
        default: {
            std::vector<polc::Formula> children;
            const std::size_t n = 2 + rng.bounded(2);
            for (std::size_t i = 0; i < n; ++i) {
                children.push_back(random_formula(rng, atom_ids, depth - 1));
            }
            return polc::Formula::disjunction_of(std::move(children));
        }
    }
}

/// Set of atom ids a formula mentions.
inline void collect_atom_ids(const polc::Formula& f, std::set<std::string>& out) {
    if (f.kind() == polc::Formula::Kind::Atom) {
        out.insert(f.atom_id());
        return;
    }
    for (const auto& child : f.children()) collect_atom_ids(child, out);
}

/// Reference atomic-set enumerator. Chooses attribute-index subsets of the
/// given size recursively, then expands value assignments recursively
/// (depth-first, which makes the last chosen attribute vary fastest), and
/// assembles ids with plain string concatenation.
inline void reference_category_atomics(const polc::Category& category, std::size_t subset_size,
                                       std::vector<std::string>& out) {
    std::vector<std::size_t> chosen;

    std::function<void()> expand_values;
    std::vector<std::string> parts;
    expand_values = [&] {
        if (parts.size() == chosen.size()) {
            std::string id = category.name + "(";
            for (std::size_t i = 0; i < parts.size(); ++i) {
                if (i > 0) id += ",";
                id += parts[i];
            }
            id += ")";
            out.push_back(std::move(id));
            return;
        }
        const polc::Attribute& attribute = category.attributes[chosen[parts.size()]];
        for (const auto& value : attribute.domain) {
            parts.push_back(attribute.name + "=" + value.value);
            expand_values();
            parts.pop_back();
        }
    };

    std::function<void(std::size_t)> choose = [&](std::size_t start) {
        if (chosen.size() == subset_size) {
            expand_values();
            return;
        }
        for (std::size_t i = start; i < category.attributes.size(); ++i) {
            chosen.push_back(i);
            choose(i + 1);
            chosen.pop_back();
        }
    };
    choose(0);
}

/// Reference atomic ids for a whole taxonomy under an optional attribute cap.
inline std::vector<std::string> reference_atomic_ids(const polc::Taxonomy& taxonomy,
                                                     std::optional<int> cap) {
    std::vector<std::string> out;
    for (const auto& category : taxonomy.categories()) {
        std::size_t subset_size = category.attributes.size();
        if (cap) {
            subset_size = std::min<std::size_t>(static_cast<std::size_t>(*cap), subset_size);
        }
        reference_category_atomics(category, subset_size, out);
    }
    return out;
}

/// Random small taxonomy built through the public JSON loader.
inline polc::Taxonomy random_taxonomy(Rng& rng) {
    polc::Json doc;
    doc["categories"] = polc::Json::array();
    const std::size_t category_count = 1 + rng.bounded(3);
    for (std::size_t c = 0; c < category_count; ++c) {
        polc::Json cat;
        cat["name"] = "cat-" + std::to_string(c);
        cat["attributes"] = polc::Json::array();
        const std::size_t attribute_count = 1 + rng.bounded(4);
        for (std::size_t a = 0; a < attribute_count; ++a) {
            polc::Json attr;
            attr["name"] = "attr-" + std::to_string(a);
            attr["values"] = polc::Json::array();
            const std::size_t value_count = 2 + rng.bounded(3);
            for (std::size_t v = 0; v < value_count; ++v) {
                polc::Json value;
                value["value"] = "v" + std::to_string(v);
                value["description"] = "description of v" + std::to_string(v);
                attr["values"].push_back(value);
            }
            cat["attributes"].push_back(attr);
        }
        doc["categories"].push_back(cat);
    }
    return polc::Taxonomy::from_json(doc);
}

/// Fresh directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        const auto tag = std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1));
        path_ = std::filesystem::temp_directory_path() / ("polc-test-" + tag);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return POLC_DATA_DIR; }
inline std::filesystem::path golden_dir() { return POLC_GOLDEN_DIR; }

}  // namespace testutil
