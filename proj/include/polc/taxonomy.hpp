#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polc/digest.hpp"
#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"
#include "polc/text.hpp"

namespace polc {

struct AttributeValue {
    std::string value;
    std::string description;
};

struct Attribute {
    std::string name;
    std::vector<AttributeValue> domain;  // ordered as declared; at least 2 values

    const AttributeValue* find_value(std::string_view value) const {
        for (const auto& entry : domain) {
            if (entry.value == value) return &entry;
        }
        return nullptr;
    }
};

struct Category {
    std::string name;
    std::vector<Attribute> attributes;  // ordered as declared; at least 1

    const Attribute* find_attribute(std::string_view name_) const {
        for (const auto& attribute : attributes) {
            if (attribute.name == name_) return &attribute;
        }
        return nullptr;
    }

    int attribute_index(std::string_view name_) const {
        for (std::size_t i = 0; i < attributes.size(); ++i) {
            if (attributes[i].name == name_) return static_cast<int>(i);
        }
        return -1;
    }
};

/// A privacy-practice taxonomy: ordered categories, each with ordered
/// attributes over finite value domains. Identifiers are lowercase kebab-case
/// (normalized at load). Immutable once constructed; the fingerprint is a
/// content digest over the full normalized structure (descriptions included,
/// since statement generation consumes them).
class Taxonomy {
public:
    static Taxonomy from_json(const Json& doc) {
        Taxonomy taxonomy;
        if (!doc.is_object()) throw SchemaError("$", "taxonomy document must be a JSON object");
        if (!doc.contains("categories") || !doc["categories"].is_array()) {
            throw SchemaError("categories", "missing or not an array");
        }
        const Json& categories = doc["categories"];
        if (categories.empty()) throw SchemaError("categories", "at least one category required");

        std::set<std::string> category_names;
        for (std::size_t ci = 0; ci < categories.size(); ++ci) {
            const std::string cpath = "categories[" + std::to_string(ci) + "]";
            const Json& cat_doc = categories[ci];
            if (!cat_doc.is_object()) throw SchemaError(cpath, "category must be an object");
            Category category;
            category.name = normalize_identifier(require_string(cat_doc, "name", cpath), cpath + ".name");
            if (!category_names.insert(category.name).second) {
                throw SchemaError(cpath + ".name", "duplicate category \"" + category.name + "\"");
            }
            if (!cat_doc.contains("attributes") || !cat_doc["attributes"].is_array() ||
                cat_doc["attributes"].empty()) {
                throw SchemaError(cpath + ".attributes", "at least one attribute required");
            }
            const Json& attributes = cat_doc["attributes"];
            std::set<std::string> attribute_names;
            for (std::size_t ai = 0; ai < attributes.size(); ++ai) {
                const std::string apath = cpath + ".attributes[" + std::to_string(ai) + "]";
                const Json& attr_doc = attributes[ai];
                if (!attr_doc.is_object()) throw SchemaError(apath, "attribute must be an object");
                Attribute attribute;
                attribute.name =
                    normalize_identifier(require_string(attr_doc, "name", apath), apath + ".name");
                if (!attribute_names.insert(attribute.name).second) {
                    throw SchemaError(apath + ".name",
                                      "duplicate attribute \"" + attribute.name + "\" in category \"" +
                                          category.name + "\"");
                }
                if (!attr_doc.contains("values") || !attr_doc["values"].is_array()) {
                    throw SchemaError(apath + ".values", "missing or not an array");
                }
                const Json& values = attr_doc["values"];
                if (values.size() < 2) {
                    throw SchemaError(apath + ".values", "attribute domain needs at least 2 values");
                }
                std::set<std::string> value_names;
                for (std::size_t vi = 0; vi < values.size(); ++vi) {
                    const std::string vpath = apath + ".values[" + std::to_string(vi) + "]";
                    const Json& value_doc = values[vi];
                    if (!value_doc.is_object()) throw SchemaError(vpath, "value must be an object");
                    AttributeValue value;
                    value.value =
                        normalize_identifier(require_string(value_doc, "value", vpath), vpath + ".value");
                    value.description = trim(require_string(value_doc, "description", vpath));
                    if (value.description.empty()) {
                        throw SchemaError(vpath + ".description", "description must be nonempty");
                    }
                    if (!value_names.insert(value.value).second) {
                        throw SchemaError(vpath + ".value",
                                          "duplicate value \"" + value.value + "\" in attribute \"" +
                                              attribute.name + "\"");
                    }
                    attribute.domain.push_back(std::move(value));
                }
                category.attributes.push_back(std::move(attribute));
            }
            taxonomy.categories_.push_back(std::move(category));
        }
        taxonomy.fingerprint_ = content_digest(taxonomy.canonical_dump());
        return taxonomy;
    }

    static Taxonomy load_file(const std::filesystem::path& path) {
        Json doc;
        try {
            doc = Json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
        }
        return from_json(doc);
    }

    const std::vector<Category>& categories() const { return categories_; }

    const Category* find_category(std::string_view name) const {
        for (const auto& category : categories_) {
            if (category.name == name) return &category;
        }
        return nullptr;
    }

    /// Content digest over the normalized structure; two taxonomies with the
    /// same fingerprint generate the same atomic formulae and statements.
    const std::string& fingerprint() const { return fingerprint_; }

private:
    Taxonomy() = default;

    static std::string require_string(const Json& doc, const char* key, const std::string& path) {
        if (!doc.contains(key) || !doc[key].is_string()) {
            throw SchemaError(path + "." + key, "missing or not a string");
        }
        return doc[key].get<std::string>();
    }

    std::string canonical_dump() const {
        std::string out;
        for (const auto& category : categories_) {
            out += "category " + category.name + "\n";
            for (const auto& attribute : category.attributes) {
                out += " attribute " + attribute.name + "\n";
                for (const auto& value : attribute.domain) {
                    out += "  value " + value.value + " :: " + value.description + "\n";
                }
            }
        }
        return out;
    }

    std::vector<Category> categories_;
    std::string fingerprint_;
};

/// One fully ground practice proposition: a category plus a value binding for
/// a nonempty subset of its attributes, listed in taxonomy attribute order.
struct AtomicFormula {
    std::string category;
    std::vector<std::pair<std::string, std::string>> bindings;  // (attribute, value)
    std::string id;                                             // canonical id, see below

    bool operator==(const AtomicFormula& other) const {
        return category == other.category && bindings == other.bindings;
    }
};

/// Canonical id: `category(attr1=v1,attr2=v2,...)`, attributes in taxonomy
/// order, no whitespace.
inline std::string canonical_atomic_id(const std::string& category,
                                       const std::vector<std::pair<std::string, std::string>>& bindings) {
    std::string id = category + "(";
    for (std::size_t i = 0; i < bindings.size(); ++i) {
        if (i > 0) id += ",";
        id += bindings[i].first + "=" + bindings[i].second;
    }
    id += ")";
    return id;
}

/// Parses a canonical atomic id back into (category, bindings). Strict: no
/// whitespace, at least one binding, kebab-case identifiers.
inline AtomicFormula parse_atomic_id(std::string_view id) {
    const std::string path = "atomic id \"" + std::string(id) + "\"";
    const std::size_t open = id.find('(');
    if (open == std::string_view::npos || id.empty() || id.back() != ')') {
        throw SchemaError(path, "expected category(attr=value,...)");
    }
    AtomicFormula atomic;
    atomic.category = std::string(id.substr(0, open));
    if (!is_kebab_case(atomic.category)) {
        throw SchemaError(path, "category is not lowercase kebab-case");
    }
    std::string_view body = id.substr(open + 1, id.size() - open - 2);
    if (body.empty()) throw SchemaError(path, "at least one attribute binding required");
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t comma = body.find(',', start);
        if (comma == std::string_view::npos) comma = body.size();
        std::string_view binding = body.substr(start, comma - start);
        const std::size_t eq = binding.find('=');
        if (eq == std::string_view::npos) {
            throw SchemaError(path, "binding \"" + std::string(binding) + "\" lacks '='");
        }
        std::string attribute(binding.substr(0, eq));
        std::string value(binding.substr(eq + 1));
        if (!is_kebab_case(attribute) || !is_kebab_case(value)) {
            throw SchemaError(path, "binding \"" + std::string(binding) +
                                        "\" is not kebab-case attr=value");
        }
        atomic.bindings.emplace_back(std::move(attribute), std::move(value));
        if (comma == body.size()) break;
        start = comma + 1;
    }
    atomic.id = canonical_atomic_id(atomic.category, atomic.bindings);
    if (atomic.id != id) throw SchemaError(path, "id is not in canonical form");
    return atomic;
}

/// Checks that an atomic is well-formed against `taxonomy`: known category,
/// known attributes in taxonomy order, values inside their domains.
inline void validate_atomic(const Taxonomy& taxonomy, const AtomicFormula& atomic) {
    const std::string path = "atomic id \"" + atomic.id + "\"";
    const Category* category = taxonomy.find_category(atomic.category);
    if (!category) throw SchemaError(path, "unknown category \"" + atomic.category + "\"");
    if (atomic.bindings.empty()) throw SchemaError(path, "at least one attribute binding required");
    int last_index = -1;
    for (const auto& [attribute, value] : atomic.bindings) {
        const int index = category->attribute_index(attribute);
        if (index < 0) {
            throw SchemaError(path, "unknown attribute \"" + attribute + "\" in category \"" +
                                        atomic.category + "\"");
        }
        if (index <= last_index) {
            throw SchemaError(path, "attributes out of taxonomy order or repeated");
        }
        last_index = index;
        if (!category->attributes[static_cast<std::size_t>(index)].find_value(value)) {
            throw SchemaError(path, "value \"" + value + "\" not in domain of \"" + atomic.category +
                                        "." + attribute + "\"");
        }
    }
}

namespace detail {

/// Size-m index subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<int>> index_combinations(int n, int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) current[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(current);
        int i = m - 1;
        while (i >= 0 && current[static_cast<std::size_t>(i)] == n - m + i) --i;
        if (i < 0) break;
        ++current[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < m; ++j) {
            current[static_cast<std::size_t>(j)] = current[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return out;
}

}  // namespace detail

/// Generates the full atomic-formula set of `taxonomy`.
///
/// Without a cap, every category contributes the Cartesian product over all of
/// its attributes. With a cap c, it contributes one product per attribute
/// subset of size exactly min(c, attribute count) — the joint distribution is
/// projected onto fixed-size attribute groups to keep the set tractable.
///
/// Order is deterministic: category order, then subset order (lexicographic in
/// attribute indices), then value order with the last attribute varying
/// fastest.
inline std::vector<AtomicFormula> generate_atomics(const Taxonomy& taxonomy,
                                                   std::optional<int> cap = std::nullopt) {
    if (cap && *cap < 1) throw Error("attribute cap must be at least 1");
    std::vector<AtomicFormula> atomics;
    for (const auto& category : taxonomy.categories()) {
        const int attribute_count = static_cast<int>(category.attributes.size());
        const int subset_size = cap ? std::min(*cap, attribute_count) : attribute_count;
        for (const auto& subset : detail::index_combinations(attribute_count, subset_size)) {
            // Odometer over the chosen attributes, last one fastest.
            std::vector<std::size_t> odometer(subset.size(), 0);
            while (true) {
                AtomicFormula atomic;
                atomic.category = category.name;
                for (std::size_t i = 0; i < subset.size(); ++i) {
                    const Attribute& attribute =
                        category.attributes[static_cast<std::size_t>(subset[i])];
                    atomic.bindings.emplace_back(attribute.name, attribute.domain[odometer[i]].value);
                }
                atomic.id = canonical_atomic_id(atomic.category, atomic.bindings);
                atomics.push_back(std::move(atomic));

                int wheel = static_cast<int>(subset.size()) - 1;
                while (wheel >= 0) {
                    const Attribute& attribute =
                        category.attributes[static_cast<std::size_t>(subset[static_cast<std::size_t>(wheel)])];
                    if (++odometer[static_cast<std::size_t>(wheel)] < attribute.domain.size()) break;
                    odometer[static_cast<std::size_t>(wheel)] = 0;
                    --wheel;
                }
                if (wheel < 0) break;
            }
        }
    }
    return atomics;
}

}  // namespace polc
