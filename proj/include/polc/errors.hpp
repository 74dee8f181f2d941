#pragma once

#include <stdexcept>
#include <string>

namespace polc {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// A structured document violated its schema. `path` names the offending node
/// (e.g. "categories[2].attributes[0].values").
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& message)
        : Error(path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Syntax error in the formula language, with 1-based source position.
class FormulaParseError : public Error {
public:
    FormulaParseError(int line, int column, const std::string& message)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                message),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// An attribute predicate could not be resolved against the taxonomy or the
/// compiled atomic set (unknown name, or no atomic matches the predicate).
class DesugarError : public Error {
public:
    using Error::Error;
};

/// Formula evaluation failed (atomic missing from the truth table, or the
/// formula still contains an unresolved attribute predicate).
class EvalError : public Error {
public:
    using Error::Error;
};

/// Two truth tables that were expected to be comparable are not (different
/// taxonomy fingerprints or different atomic sets).
class TableMismatchError : public Error {
public:
    using Error::Error;
};

/// A backend response did not start with a Yes/No verdict. Carries the raw text.
class VerdictError : public Error {
public:
    explicit VerdictError(std::string raw)
        : Error("response does not begin with a Yes or No verdict"), raw_(std::move(raw)) {}

    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

/// A remote backend could not be reached or kept failing after retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// A document could not be ingested (e.g. empty after normalization).
class IngestError : public Error {
public:
    using Error::Error;
};

}  // namespace polc
