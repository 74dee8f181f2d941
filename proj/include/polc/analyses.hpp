#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"
#include "polc/logic.hpp"
#include "polc/taxonomy.hpp"
#include "polc/truth_table.hpp"

namespace polc {

/// A named compliance requirement with the regulation clause it mirrors.
struct ComplianceRule {
    std::string name;
    std::string regulation;
    std::string formula_text;
    Formula formula = Formula::atom("unset");
};

/// An ordered list of uniquely named rules, loadable from JSON.
class RuleSet {
public:
    static RuleSet from_json(const Json& doc) {
        if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
            throw SchemaError("rules", "missing or not an array");
        }
        RuleSet set;
        std::set<std::string> names;
        for (std::size_t i = 0; i < doc["rules"].size(); ++i) {
            const std::string path = "rules[" + std::to_string(i) + "]";
            const Json& row = doc["rules"][i];
            if (!row.is_object()) throw SchemaError(path, "rule must be an object");
            auto require_string = [&](const char* key) {
                if (!row.contains(key) || !row[key].is_string()) {
                    throw SchemaError(path + "." + key, "missing or not a string");
                }
                return row[key].get<std::string>();
            };
            ComplianceRule rule;
            rule.name = require_string("name");
            rule.regulation = require_string("regulation");
            rule.formula_text = require_string("formula");
            if (rule.name.empty()) throw SchemaError(path + ".name", "rule name must be nonempty");
            if (!names.insert(rule.name).second) {
                throw SchemaError(path + ".name", "duplicate rule name \"" + rule.name + "\"");
            }
            try {
                rule.formula = parse_formula(rule.formula_text);
            } catch (const FormulaParseError& e) {
                throw SchemaError(path + ".formula", e.what());
            }
            set.rules_.push_back(std::move(rule));
        }
        return set;
    }

    static RuleSet load_file(const std::filesystem::path& path) {
        Json doc;
        try {
            doc = Json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
        }
        return from_json(doc);
    }

    const std::vector<ComplianceRule>& rules() const { return rules_; }

private:
    std::vector<ComplianceRule> rules_;
};

struct ComplianceReportRow {
    std::string name;
    std::string regulation;
    bool satisfied = false;
    std::vector<std::string> witnesses;
    std::vector<int> evidence;
};

struct ComplianceReport {
    std::string policy_id;
    bool compliant = true;
    std::vector<ComplianceReportRow> rows;
};

/// Desugars every rule against the compiled atomic set and evaluates it on
/// the policy's truth table.
inline ComplianceReport comply(const RuleSet& rule_set, const Taxonomy& taxonomy,
                               const std::vector<AtomicFormula>& atomics, const TruthTable& table) {
    if (table.taxonomy_fingerprint != taxonomy.fingerprint()) {
        throw TableMismatchError("truth table of policy \"" + table.policy_id +
                                 "\" was compiled against a different taxonomy");
    }
    std::vector<std::pair<std::string, Formula>> named;
    named.reserve(rule_set.rules().size());
    for (const ComplianceRule& rule : rule_set.rules()) {
        named.emplace_back(rule.name, desugar(rule.formula, taxonomy, atomics));
    }
    const ComplianceOutcome outcome = check_compliance(named, table);
    ComplianceReport report;
    report.policy_id = table.policy_id;
    report.compliant = outcome.compliant;
    for (std::size_t i = 0; i < outcome.rules.size(); ++i) {
        const RuleOutcome& row = outcome.rules[i];
        report.rows.push_back({row.name, rule_set.rules()[i].regulation, row.satisfied,
                               row.witnesses, row.evidence});
    }
    return report;
}

inline Json to_json(const ComplianceReport& report) {
    Json doc;
    doc["format_version"] = 1;
    doc["policy_id"] = report.policy_id;
    doc["compliant"] = report.compliant;
    Json rows = Json::array();
    for (const ComplianceReportRow& row : report.rows) {
        Json entry;
        entry["name"] = row.name;
        entry["regulation"] = row.regulation;
        entry["satisfied"] = row.satisfied;
        entry["witnesses"] = row.witnesses;
        entry["evidence"] = row.evidence;
        rows.push_back(std::move(entry));
    }
    doc["rules"] = std::move(rows);
    return doc;
}

/// Valuation diff between two compiles of the same policy line (or any two
/// comparable tables). Thin naming wrapper over valuation_diff.
inline DiffReport diff_over_time(const TruthTable& older, const TruthTable& newer) {
    return valuation_diff(older, newer);
}

inline Json to_json(const DiffReport& report, const std::string& old_policy_id,
                    const std::string& new_policy_id) {
    Json doc;
    doc["format_version"] = 1;
    doc["old_policy_id"] = old_policy_id;
    doc["new_policy_id"] = new_policy_id;
    doc["total_changed"] = report.changed.size();
    doc["changed"] = report.changed;
    Json counts = Json::object();
    for (const auto& [category, count] : report.per_category_counts) counts[category] = count;
    doc["per_category_counts"] = std::move(counts);
    return doc;
}

/// Plot-ready CSV: one row per category with the number of flipped atomics.
inline std::string diff_to_csv(const DiffReport& report) {
    std::string csv = "category,changed\n";
    for (const auto& [category, count] : report.per_category_counts) {
        csv += category + "," + std::to_string(count) + "\n";
    }
    return csv;
}

/// Cross-policy comparison over two attributes of one category. Cell (vr, vc)
/// holds the policies whose valuation makes `category.row = vr AND
/// category.col = vc` true, resolved jointly: the membership disjunction
/// ranges over the compiled atomics that bind both attributes at once.
struct ComparisonMatrix {
    std::string category;
    std::string row_attribute;
    std::string col_attribute;
    std::vector<std::string> row_values;  // taxonomy domain order
    std::vector<std::string> col_values;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> cells;
};

inline ComparisonMatrix compare_tables(const std::map<std::string, TruthTable>& tables,
                                       const Taxonomy& taxonomy, const std::string& category_name,
                                       const std::string& row_attribute,
                                       const std::string& col_attribute) {
    if (tables.empty()) throw Error("no truth tables to compare");
    const Category* category = taxonomy.find_category(category_name);
    if (!category) throw DesugarError("unknown category \"" + category_name + "\"");
    const Attribute* row_attr = category->find_attribute(row_attribute);
    const Attribute* col_attr = category->find_attribute(col_attribute);
    if (!row_attr) {
        throw DesugarError("unknown attribute \"" + category_name + "." + row_attribute + "\"");
    }
    if (!col_attr) {
        throw DesugarError("unknown attribute \"" + category_name + "." + col_attribute + "\"");
    }
    if (row_attribute == col_attribute) {
        throw Error("row and column attributes must differ");
    }

    // All tables must share the taxonomy and the atomic set.
    const TruthTable& first = tables.begin()->second;
    for (const auto& [policy_id, table] : tables) {
        if (table.taxonomy_fingerprint != taxonomy.fingerprint()) {
            throw TableMismatchError("truth table of policy \"" + policy_id +
                                     "\" was compiled against a different taxonomy");
        }
        if (table.entries.size() != first.entries.size() ||
            !std::equal(table.entries.begin(), table.entries.end(), first.entries.begin(),
                        [](const auto& a, const auto& b) { return a.first == b.first; })) {
            throw TableMismatchError("truth tables do not share one atomic set (policy \"" +
                                     policy_id + "\" differs)");
        }
    }

    // The atomics that bind both attributes jointly, bucketed by value pair.
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> joint_atomics;
    for (const auto& [id, entry] : first.entries) {
        const AtomicFormula atomic = parse_atomic_id(id);
        if (atomic.category != category_name) continue;
        std::string row_value;
        std::string col_value;
        for (const auto& [attribute, value] : atomic.bindings) {
            if (attribute == row_attribute) row_value = value;
            if (attribute == col_attribute) col_value = value;
        }
        if (!row_value.empty() && !col_value.empty()) {
            joint_atomics[{row_value, col_value}].push_back(id);
        }
    }
    if (joint_atomics.empty()) {
        throw DesugarError(
            "no compiled atomic formula binds \"" + row_attribute + "\" and \"" + col_attribute +
            "\" of category \"" + category_name +
            "\" jointly; the tables only carry marginal valuations, which cannot answer a joint "
            "comparison — recompile with an attribute cap of at least 2 covering this pair");
    }

    ComparisonMatrix matrix;
    matrix.category = category_name;
    matrix.row_attribute = row_attribute;
    matrix.col_attribute = col_attribute;
    for (const AttributeValue& value : row_attr->domain) matrix.row_values.push_back(value.value);
    for (const AttributeValue& value : col_attr->domain) matrix.col_values.push_back(value.value);

    for (const std::string& row_value : matrix.row_values) {
        for (const std::string& col_value : matrix.col_values) {
            const auto bucket = joint_atomics.find({row_value, col_value});
            std::vector<std::string>& members = matrix.cells[{row_value, col_value}];
            if (bucket == joint_atomics.end()) continue;  // no joint atomic, no member
            std::vector<Formula> atoms;
            atoms.reserve(bucket->second.size());
            for (const std::string& id : bucket->second) atoms.push_back(Formula::atom(id));
            const Formula membership = Formula::disjunction_of(std::move(atoms));
            for (const auto& [policy_id, table] : tables) {
                if (evaluate(membership, table)) members.push_back(policy_id);
            }
        }
    }
    return matrix;
}

inline Json to_json(const ComparisonMatrix& matrix) {
    Json doc;
    doc["format_version"] = 1;
    doc["category"] = matrix.category;
    doc["row_attribute"] = matrix.row_attribute;
    doc["col_attribute"] = matrix.col_attribute;
    doc["row_values"] = matrix.row_values;
    doc["col_values"] = matrix.col_values;
    Json cells = Json::array();
    for (const std::string& row_value : matrix.row_values) {
        for (const std::string& col_value : matrix.col_values) {
            Json cell;
            cell["row"] = row_value;
            cell["col"] = col_value;
            cell["policies"] = matrix.cells.at({row_value, col_value});
            cells.push_back(std::move(cell));
        }
    }
    doc["cells"] = std::move(cells);
    return doc;
}

/// Fixed-width text grid; cells list their policy ids comma-joined.
inline std::string render_matrix_text(const ComparisonMatrix& matrix) {
    const std::string corner = matrix.row_attribute + " \\ " + matrix.col_attribute;
    auto cell_text = [&](const std::string& row_value, const std::string& col_value) {
        const auto& members = matrix.cells.at({row_value, col_value});
        std::string joined;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (i > 0) joined += ",";
            joined += members[i];
        }
        return joined.empty() ? std::string("-") : joined;
    };

    std::vector<std::size_t> widths;
    widths.push_back(corner.size());
    for (const std::string& row_value : matrix.row_values) {
        widths[0] = std::max(widths[0], row_value.size());
    }
    for (const std::string& col_value : matrix.col_values) {
        std::size_t width = col_value.size();
        for (const std::string& row_value : matrix.row_values) {
            width = std::max(width, cell_text(row_value, col_value).size());
        }
        widths.push_back(width);
    }

    auto pad = [](const std::string& text, std::size_t width) {
        return text + std::string(width - text.size(), ' ');
    };
    std::string out = "category: " + matrix.category + "\n";
    out += pad(corner, widths[0]);
    for (std::size_t c = 0; c < matrix.col_values.size(); ++c) {
        out += " | " + pad(matrix.col_values[c], widths[c + 1]);
    }
    out += "\n";
    for (const std::string& row_value : matrix.row_values) {
        out += pad(row_value, widths[0]);
        for (std::size_t c = 0; c < matrix.col_values.size(); ++c) {
            out += " | " + pad(cell_text(row_value, matrix.col_values[c]), widths[c + 1]);
        }
        out += "\n";
    }
    return out;
}

}  // namespace polc
