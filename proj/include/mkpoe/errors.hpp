#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mkpoe {

/// Input failed validation: bad comparison tuple, malformed matrix,
/// out-of-range index, and so on.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parse failure carrying the 1-based line number of the offending input.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line)
        : ValidationError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

/// The operation requires an acyclic constraint graph but the input contains
/// a directed cycle.  The witness lists the item pairs along one such cycle,
/// first pair repeated at the end.
class CycleError : public ValidationError {
public:
    CycleError(const std::string& msg, std::vector<std::pair<int, int>> witness)
        : ValidationError(msg), witness_(std::move(witness)) {}

    const std::vector<std::pair<int, int>>& witness() const { return witness_; }

private:
    std::vector<std::pair<int, int>> witness_;
};

}  // namespace mkpoe
