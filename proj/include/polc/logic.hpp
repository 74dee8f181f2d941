#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polc/errors.hpp"
#include "polc/taxonomy.hpp"
#include "polc/truth_table.hpp"

namespace polc {

/// Immutable propositional formula over atomic-formula ids, with an
/// existential attribute-predicate sugar (`category.attribute = value`).
///
/// Connective arity is normalized at construction: nested conjunctions and
/// disjunctions are flattened, so And/Or nodes always have >= 2 children and
/// never a child of the same kind.
class Formula {
public:
    enum class Kind { Atom, Predicate, Not, And, Or };

    static Formula atom(std::string id) {
        auto node = std::make_shared<Node>();
        node->kind = Kind::Atom;
        node->first = std::move(id);
        return Formula(std::move(node));
    }

    static Formula predicate(std::string category, std::string attribute, std::string value) {
        auto node = std::make_shared<Node>();
        node->kind = Kind::Predicate;
        node->first = std::move(category);
        node->second = std::move(attribute);
        node->third = std::move(value);
        return Formula(std::move(node));
    }

    static Formula negation_of(Formula operand) {
        auto node = std::make_shared<Node>();
        node->kind = Kind::Not;
        node->children.push_back(std::move(operand));
        return Formula(std::move(node));
    }

    static Formula conjunction_of(std::vector<Formula> operands) {
        return nary(Kind::And, std::move(operands));
    }

    static Formula disjunction_of(std::vector<Formula> operands) {
        return nary(Kind::Or, std::move(operands));
    }

    Kind kind() const { return node_->kind; }

    const std::string& atom_id() const { return expect(Kind::Atom)->first; }
    const std::string& category() const { return expect(Kind::Predicate)->first; }
    const std::string& attribute() const { return expect(Kind::Predicate)->second; }
    const std::string& value() const { return expect(Kind::Predicate)->third; }

    /// Children of Not (exactly 1) and And/Or (>= 2).
    const std::vector<Formula>& children() const { return node_->children; }

    bool operator==(const Formula& other) const {
        if (node_ == other.node_) return true;
        if (node_->kind != other.node_->kind) return false;
        switch (node_->kind) {
            case Kind::Atom:
                return node_->first == other.node_->first;
            case Kind::Predicate:
                return node_->first == other.node_->first && node_->second == other.node_->second &&
                       node_->third == other.node_->third;
            default:
                return node_->children == other.node_->children;
        }
    }

    bool operator!=(const Formula& other) const { return !(*this == other); }

private:
    struct Node {
        Kind kind = Kind::Atom;
        std::string first;   // atom id, or predicate category
        std::string second;  // predicate attribute
        std::string third;   // predicate value
        std::vector<Formula> children;
    };

    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    static Formula nary(Kind kind, std::vector<Formula> operands) {
        if (operands.empty()) throw Error("a connective needs at least one operand");
        if (operands.size() == 1) return std::move(operands.front());
        auto node = std::make_shared<Node>();
        node->kind = kind;
        for (auto& operand : operands) {
            if (operand.kind() == kind) {
                for (const auto& child : operand.children()) node->children.push_back(child);
            } else {
                node->children.push_back(std::move(operand));
            }
        }
        return Formula(std::move(node));
    }

    const Node* expect(Kind kind) const {
        if (node_->kind != kind) throw Error("formula node is not of the requested kind");
        return node_.get();
    }

    std::shared_ptr<const Node> node_;
};

namespace detail {

// ---------------------------------------------------------------------------
// Formula language
//
//   formula := or
//   or      := and { "OR" and }
//   and     := unary { "AND" unary }
//   unary   := "NOT" unary | primary
//   primary := "(" formula ")" | atom
//   atom    := ident "(" binding { "," binding } ")" | ident "." ident "=" ident
//   binding := ident "=" ident
//
// Keywords are case-insensitive; precedence NOT > AND > OR.
// ---------------------------------------------------------------------------

struct FormulaToken {
    enum class Type { Ident, Not, And, Or, LParen, RParen, Dot, Equals, Comma, End };
    Type type = Type::End;
    std::string text;
    int line = 1;
    int column = 1;
};

class FormulaLexer {
public:
    explicit FormulaLexer(std::string_view source) : source_(source) {}

    FormulaToken next() {
        skip_whitespace();
        FormulaToken token;
        token.line = line_;
        token.column = column_;
        if (pos_ >= source_.size()) {
            token.type = FormulaToken::Type::End;
            return token;
        }
        const char c = source_[pos_];
        switch (c) {
            case '(': token.type = FormulaToken::Type::LParen; advance(); return token;
            case ')': token.type = FormulaToken::Type::RParen; advance(); return token;
            case '.': token.type = FormulaToken::Type::Dot; advance(); return token;
            case '=': token.type = FormulaToken::Type::Equals; advance(); return token;
            case ',': token.type = FormulaToken::Type::Comma; advance(); return token;
            default: break;
        }
        if (is_ident_char(c)) {
            std::string text;
            while (pos_ < source_.size() && is_ident_char(source_[pos_])) {
                text.push_back(source_[pos_]);
                advance();
            }
            const std::string upper = [&] {
                std::string u = text;
                for (char& ch : u) ch = static_cast<char>((ch >= 'a' && ch <= 'z') ? ch - 'a' + 'A' : ch);
                return u;
            }();
            if (upper == "NOT") token.type = FormulaToken::Type::Not;
            else if (upper == "AND") token.type = FormulaToken::Type::And;
            else if (upper == "OR") token.type = FormulaToken::Type::Or;
            else {
                token.type = FormulaToken::Type::Ident;
                token.text = std::move(text);
            }
            return token;
        }
        throw FormulaParseError(line_, column_, std::string("unexpected character '") + c + "'");
    }

private:
    static bool is_ident_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '-' || c == '_';
    }

    void skip_whitespace() {
        while (pos_ < source_.size()) {
            const char c = source_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
                advance();
            } else {
                break;
            }
        }
    }

    void advance() {
        if (source_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    std::string_view source_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class FormulaParser {
public:
    explicit FormulaParser(std::string_view source) : lexer_(source) { advance(); }

    Formula parse() {
        Formula formula = parse_or();
        expect(FormulaToken::Type::End, "end of input");
        return formula;
    }

private:
    Formula parse_or() {
        std::vector<Formula> operands;
        operands.push_back(parse_and());
        while (current_.type == FormulaToken::Type::Or) {
            advance();
            operands.push_back(parse_and());
        }
        return Formula::disjunction_of(std::move(operands));
    }

    Formula parse_and() {
        std::vector<Formula> operands;
        operands.push_back(parse_unary());
        while (current_.type == FormulaToken::Type::And) {
            advance();
            operands.push_back(parse_unary());
        }
        return Formula::conjunction_of(std::move(operands));
    }

    Formula parse_unary() {
        if (current_.type == FormulaToken::Type::Not) {
            advance();
            return Formula::negation_of(parse_unary());
        }
        return parse_primary();
    }

    Formula parse_primary() {
        if (current_.type == FormulaToken::Type::LParen) {
            advance();
            Formula inner = parse_or();
            expect(FormulaToken::Type::RParen, "')'");
            advance();
            return inner;
        }
        if (current_.type != FormulaToken::Type::Ident) {
            fail("a formula");
        }
        std::string name = current_.text;
        advance();
        if (current_.type == FormulaToken::Type::LParen) {
            advance();
            std::vector<std::pair<std::string, std::string>> bindings;
            bindings.push_back(parse_binding());
            while (current_.type == FormulaToken::Type::Comma) {
                advance();
                bindings.push_back(parse_binding());
            }
            expect(FormulaToken::Type::RParen, "')'");
            advance();
            return Formula::atom(canonical_atomic_id(name, bindings));
        }
        if (current_.type == FormulaToken::Type::Dot) {
            advance();
            const std::string attribute = expect_ident("attribute name");
            expect(FormulaToken::Type::Equals, "'='");
            advance();
            const std::string value = expect_ident("value identifier");
            return Formula::predicate(std::move(name), attribute, value);
        }
        fail("'(' or '.' after identifier");
    }

    std::pair<std::string, std::string> parse_binding() {
        const std::string attribute = expect_ident("attribute name");
        expect(FormulaToken::Type::Equals, "'='");
        advance();
        const std::string value = expect_ident("value identifier");
        return {attribute, value};
    }

    std::string expect_ident(const char* what) {
        if (current_.type != FormulaToken::Type::Ident) fail(what);
        std::string text = current_.text;
        advance();
        return text;
    }

    void expect(FormulaToken::Type type, const char* what) {
        if (current_.type != type) fail(what);
    }

    [[noreturn]] void fail(const char* expected) {
        throw FormulaParseError(current_.line, current_.column,
                                "expected " + std::string(expected) + ", got " + describe(current_));
    }

    static std::string describe(const FormulaToken& token) {
        switch (token.type) {
            case FormulaToken::Type::Ident: return "identifier \"" + token.text + "\"";
            case FormulaToken::Type::Not: return "\"NOT\"";
            case FormulaToken::Type::And: return "\"AND\"";
            case FormulaToken::Type::Or: return "\"OR\"";
            case FormulaToken::Type::LParen: return "'('";
            case FormulaToken::Type::RParen: return "')'";
            case FormulaToken::Type::Dot: return "'.'";
            case FormulaToken::Type::Equals: return "'='";
            case FormulaToken::Type::Comma: return "','";
            case FormulaToken::Type::End: return "end of input";
        }
        return "unknown token";
    }

    void advance() { current_ = lexer_.next(); }

    FormulaLexer lexer_;
    FormulaToken current_;
};

}  // namespace detail

inline Formula parse_formula(std::string_view source) {
    return detail::FormulaParser(source).parse();
}

/// Canonical text form. Compound connectives are parenthesized, so
/// parse_formula(render_formula(f)) == f for every formula.
inline std::string render_formula(const Formula& formula) {
    switch (formula.kind()) {
        case Formula::Kind::Atom:
            return formula.atom_id();
        case Formula::Kind::Predicate:
            return formula.category() + "." + formula.attribute() + " = " + formula.value();
        case Formula::Kind::Not:
            return "NOT " + render_formula(formula.children().front());
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            const char* joiner = formula.kind() == Formula::Kind::And ? " AND " : " OR ";
            std::string out = "(";
            const auto& children = formula.children();
            for (std::size_t i = 0; i < children.size(); ++i) {
                if (i > 0) out += joiner;
                out += render_formula(children[i]);
            }
            out += ")";
            return out;
        }
    }
    throw Error("unreachable formula kind");
}

/// Replaces every attribute predicate `c.q = v` with the disjunction over the
/// compiled atomics of category c whose bindings include q=v (an existential
/// over the remaining attributes). Atoms pass through unchanged.
inline Formula desugar(const Formula& formula, const Taxonomy& taxonomy,
                       const std::vector<AtomicFormula>& atomics) {
    switch (formula.kind()) {
        case Formula::Kind::Atom:
            return formula;
        case Formula::Kind::Predicate: {
            const std::string& category_name = formula.category();
            const std::string& attribute_name = formula.attribute();
            const std::string& value_name = formula.value();
            const Category* category = taxonomy.find_category(category_name);
            if (!category) throw DesugarError("unknown category \"" + category_name + "\"");
            const Attribute* attribute = category->find_attribute(attribute_name);
            if (!attribute) {
                throw DesugarError("unknown attribute \"" + category_name + "." + attribute_name +
                                   "\"");
            }
            if (!attribute->find_value(value_name)) {
                throw DesugarError("value \"" + value_name + "\" not in domain of \"" +
                                   category_name + "." + attribute_name + "\"");
            }
            std::vector<Formula> matches;
            for (const auto& atomic : atomics) {
                if (atomic.category != category_name) continue;
                for (const auto& binding : atomic.bindings) {
                    if (binding.first == attribute_name && binding.second == value_name) {
                        matches.push_back(Formula::atom(atomic.id));
                        break;
                    }
                }
            }
            if (matches.empty()) {
                throw DesugarError("predicate \"" + category_name + "." + attribute_name + " = " +
                                   value_name +
                                   "\" matches no compiled atomic formula (was the atomic set "
                                   "generated from a different taxonomy or attribute cap?)");
            }
            return Formula::disjunction_of(std::move(matches));
        }
        case Formula::Kind::Not:
            return Formula::negation_of(desugar(formula.children().front(), taxonomy, atomics));
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            std::vector<Formula> children;
            children.reserve(formula.children().size());
            for (const auto& child : formula.children()) {
                children.push_back(desugar(child, taxonomy, atomics));
            }
            return formula.kind() == Formula::Kind::And
                       ? Formula::conjunction_of(std::move(children))
                       : Formula::disjunction_of(std::move(children));
        }
    }
    throw Error("unreachable formula kind");
}

namespace detail {

/// 0/1 valuation: NOT x -> 1 - x, AND -> min, OR -> max.
inline int eval01(const Formula& formula, const TruthTable& table) {
    switch (formula.kind()) {
        case Formula::Kind::Atom: {
            const auto it = table.entries.find(formula.atom_id());
            if (it == table.entries.end()) {
                throw EvalError("atomic formula \"" + formula.atom_id() +
                                "\" is missing from the truth table of policy \"" + table.policy_id +
                                "\"");
            }
            return it->second.value ? 1 : 0;
        }
        case Formula::Kind::Predicate:
            throw EvalError("formula contains an unresolved attribute predicate \"" +
                            formula.category() + "." + formula.attribute() + " = " + formula.value() +
                            "\"; desugar it against the compiled atomic set first");
        case Formula::Kind::Not:
            return 1 - eval01(formula.children().front(), table);
        case Formula::Kind::And: {
            int value = 1;
            for (const auto& child : formula.children()) {
                value = std::min(value, eval01(child, table));
            }
            return value;
        }
        case Formula::Kind::Or: {
            int value = 0;
            for (const auto& child : formula.children()) {
                value = std::max(value, eval01(child, table));
            }
            return value;
        }
    }
    throw Error("unreachable formula kind");
}

/// Atoms that determined the outcome: under a satisfied Or only the true
/// children matter, under a failed And only the false ones; in the remaining
/// cases every child contributed.
inline void collect_witnesses(const Formula& formula, const TruthTable& table,
                              std::set<std::string>& out) {
    switch (formula.kind()) {
        case Formula::Kind::Atom:
            out.insert(formula.atom_id());
            return;
        case Formula::Kind::Predicate:
            throw EvalError("formula contains an unresolved attribute predicate");
        case Formula::Kind::Not:
            collect_witnesses(formula.children().front(), table, out);
            return;
        case Formula::Kind::And: {
            const int value = eval01(formula, table);
            for (const auto& child : formula.children()) {
                if (value == 1 || eval01(child, table) == 0) collect_witnesses(child, table, out);
            }
            return;
        }
        case Formula::Kind::Or: {
            const int value = eval01(formula, table);
            for (const auto& child : formula.children()) {
                if (value == 0 || eval01(child, table) == 1) collect_witnesses(child, table, out);
            }
            return;
        }
    }
}

}  // namespace detail

/// Evaluates a desugared formula under a policy's valuation. A missing atomic
/// is a hard error, never a default.
inline bool evaluate(const Formula& formula, const TruthTable& table) {
    return detail::eval01(formula, table) == 1;
}

struct RuleOutcome {
    std::string name;
    bool satisfied = false;
    std::vector<std::string> witnesses;  // atomic ids that determined the outcome, sorted
    std::vector<int> evidence;           // union of their evidence indices, sorted
};

struct ComplianceOutcome {
    bool compliant = true;  // vacuously true for an empty rule list
    std::vector<RuleOutcome> rules;
};

/// Evaluates every named rule; the policy complies iff all rules hold.
inline ComplianceOutcome check_compliance(const std::vector<std::pair<std::string, Formula>>& rules,
                                          const TruthTable& table) {
    ComplianceOutcome outcome;
    for (const auto& [name, formula] : rules) {
        RuleOutcome row;
        row.name = name;
        row.satisfied = evaluate(formula, table);
        std::set<std::string> witnesses;
        detail::collect_witnesses(formula, table, witnesses);
        std::set<int> evidence;
        for (const auto& id : witnesses) {
            row.witnesses.push_back(id);
            const auto& entry = table.entries.at(id);
            evidence.insert(entry.evidence.begin(), entry.evidence.end());
        }
        row.evidence.assign(evidence.begin(), evidence.end());
        outcome.compliant = outcome.compliant && row.satisfied;
        outcome.rules.push_back(std::move(row));
    }
    return outcome;
}

struct DiffReport {
    std::vector<std::string> changed;            // atomic ids whose value differs, sorted
    std::map<std::string, int> per_category_counts;

    bool empty() const { return changed.empty(); }
};

/// Compares two valuations of the same atomic set. Tables compiled against
/// different taxonomies or atomic sets are not comparable.
inline DiffReport valuation_diff(const TruthTable& a, const TruthTable& b) {
    if (a.taxonomy_fingerprint != b.taxonomy_fingerprint) {
        throw TableMismatchError("taxonomy fingerprints differ (\"" + a.taxonomy_fingerprint +
                                 "\" vs \"" + b.taxonomy_fingerprint + "\")");
    }
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    DiffReport report;
    while (ia != a.entries.end() || ib != b.entries.end()) {
        if (ia == a.entries.end() || ib == b.entries.end() || ia->first != ib->first) {
            const std::string& offender =
                ia == a.entries.end() ? ib->first
                : ib == b.entries.end() ? ia->first
                : std::min(ia->first, ib->first);
            throw TableMismatchError("atomic sets differ (first divergence at \"" + offender + "\")");
        }
        if (ia->second.value != ib->second.value) {
            report.changed.push_back(ia->first);
            ++report.per_category_counts[category_of_atomic_id(ia->first)];
        }
        ++ia;
        ++ib;
    }
    return report;
}

/// Two policies are consistent when they induce identical valuations.
inline bool consistent(const TruthTable& a, const TruthTable& b) {
    return valuation_diff(a, b).empty();
}

}  // namespace polc
