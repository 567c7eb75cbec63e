// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heart {

enum class ErrorCode {
    SyntaxError,
    UnsupportedCard,
    MissingSupply,
    AnnotatorFailure,
    TooLarge,
    SchemaError,
    InvariantViolation,
    MissingWeight,
    InvalidConfig,
    EmptyScope,
    UnknownMetric,
    EmptyFeasibleRegion,
    RankCollision,
    MissingRank,
    NoObjectiveFound,
    EmptyReference,
    NoMatchedVariables,
    NonPositiveValue,
    BudgetTooSmall,
    DegenerateBounds,
    PortBindingMismatch,
    IoError,
};

std::string_view error_code_name(ErrorCode code);

// Every domain failure in the library is reported through this type; the CLI
// maps it to exit code 1.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

// Parse errors carry the 1-based source line.
class SyntaxError : public Error {
public:
    SyntaxError(int line, const std::string& token, const std::string& message)
        : Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ": " + message + " near '" + token + "'"),
          line_(line), token_(token) {}

    int line() const noexcept { return line_; }
    const std::string& token() const noexcept { return token_; }

private:
    int line_;
    std::string token_;
};

}  // namespace heart
