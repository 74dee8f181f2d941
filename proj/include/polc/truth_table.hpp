#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"

namespace polc {

inline constexpr int kTruthTableFormatVersion = 1;

/// Valuation of one atomic formula for one policy, plus the supporting
/// segment indices and a digest of the raw backend response.
struct TableEntry {
    bool value = false;
    std::vector<int> evidence;          // ascending segment indices
    std::string raw_response_digest;

    bool operator==(const TableEntry& other) const {
        return value == other.value && evidence == other.evidence &&
               raw_response_digest == other.raw_response_digest;
    }
};

/// The logical representation of one policy: a valuation of every compiled
/// atomic formula, keyed by canonical atomic id (sorted), plus the compile
/// metadata needed to tell tables apart.
struct TruthTable {
    std::string policy_id;
    std::string taxonomy_fingerprint;
    std::string backend_id;    // entailment model id
    std::string embedder_id;
    int k = 0;                 // retrieval depth used at compile time
    std::map<std::string, TableEntry> entries;

    bool operator==(const TruthTable& other) const {
        return policy_id == other.policy_id && taxonomy_fingerprint == other.taxonomy_fingerprint &&
               backend_id == other.backend_id && embedder_id == other.embedder_id && k == other.k &&
               entries == other.entries;
    }
};

/// Category prefix of a canonical atomic id (`data-retention(period=stated)`
/// -> `data-retention`).
inline std::string category_of_atomic_id(std::string_view id) {
    const std::size_t open = id.find('(');
    return std::string(open == std::string_view::npos ? id : id.substr(0, open));
}

inline Json to_json(const TruthTable& table) {
    Json doc;
    doc["format_version"] = kTruthTableFormatVersion;
    doc["policy_id"] = table.policy_id;
    doc["taxonomy_fingerprint"] = table.taxonomy_fingerprint;
    doc["backend_id"] = table.backend_id;
    doc["embedder_id"] = table.embedder_id;
    doc["k"] = table.k;
    Json entries = Json::array();
    for (const auto& [id, entry] : table.entries) {
        Json row;
        row["id"] = id;
        row["value"] = entry.value;
        row["evidence"] = entry.evidence;
        row["raw_response_digest"] = entry.raw_response_digest;
        entries.push_back(std::move(row));
    }
    doc["entries"] = std::move(entries);
    return doc;
}

inline TruthTable truth_table_from_json(const Json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "truth table document must be a JSON object");
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer() ||
        doc["format_version"].get<int>() != kTruthTableFormatVersion) {
        throw SchemaError("format_version", "missing or unsupported");
    }
    TruthTable table;
    auto require_string = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_string()) {
            throw SchemaError(key, "missing or not a string");
        }
        return doc[key].get<std::string>();
    };
    table.policy_id = require_string("policy_id");
    table.taxonomy_fingerprint = require_string("taxonomy_fingerprint");
    table.backend_id = require_string("backend_id");
    table.embedder_id = require_string("embedder_id");
    if (!doc.contains("k") || !doc["k"].is_number_integer()) {
        throw SchemaError("k", "missing or not an integer");
    }
    table.k = doc["k"].get<int>();
    if (!doc.contains("entries") || !doc["entries"].is_array()) {
        throw SchemaError("entries", "missing or not an array");
    }
    const Json& entries = doc["entries"];
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string path = "entries[" + std::to_string(i) + "]";
        const Json& row = entries[i];
        if (!row.is_object() || !row.contains("id") || !row["id"].is_string()) {
            throw SchemaError(path, "entry must be an object with a string id");
        }
        const std::string id = row["id"].get<std::string>();
        if (!row.contains("value") || !row["value"].is_boolean()) {
            throw SchemaError(path + ".value", "missing or not a boolean");
        }
        TableEntry entry;
        entry.value = row["value"].get<bool>();
        if (row.contains("evidence")) {
            if (!row["evidence"].is_array()) throw SchemaError(path + ".evidence", "not an array");
            for (const auto& item : row["evidence"]) {
                if (!item.is_number_integer()) {
                    throw SchemaError(path + ".evidence", "evidence entries must be integers");
                }
                entry.evidence.push_back(item.get<int>());
            }
        }
        if (row.contains("raw_response_digest")) {
            if (!row["raw_response_digest"].is_string()) {
                throw SchemaError(path + ".raw_response_digest", "not a string");
            }
            entry.raw_response_digest = row["raw_response_digest"].get<std::string>();
        }
        if (!table.entries.emplace(id, std::move(entry)).second) {
            throw SchemaError(path + ".id", "duplicate atomic id \"" + id + "\"");
        }
    }
    return table;
}

inline void save_truth_table(const TruthTable& table, const std::filesystem::path& path) {
    write_file(path, to_json(table).dump(2) + "\n");
}

inline TruthTable load_truth_table(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    return truth_table_from_json(doc);
}

}  // namespace polc
