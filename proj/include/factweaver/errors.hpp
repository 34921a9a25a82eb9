#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace factweaver {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed CSV body. `row` is the 1-based data row (header is row 0).
class CsvError : public Error {
public:
    CsvError(const std::string& what, std::size_t row, std::size_t column = 0)
        : Error(what), row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class EmptyTable : public Error {
public:
    EmptyTable() : Error("table has no data rows") {}
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class FilterError : public Error {
public:
    using Error::Error;
};

class TypeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A fact that breaks the type rules; `violations` lists every broken rule.
class ValidationError : public ParseError {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : ParseError("invalid fact: " + join_lines(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join_lines(const std::vector<std::string>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "; " : "") + v[i];
        return out;
    }
    std::vector<std::string> violations_;
};

// Data-dependent failures raised while deriving values or running tests.
class EmptyScope : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class NarrationError : public Error {
public:
    using Error::Error;
};

class SpecError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

class LayoutError : public Error {
public:
    using Error::Error;
};

}  // namespace factweaver
