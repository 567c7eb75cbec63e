// SPDX-License-Identifier: Apache-2.0
#include "heart/error.hpp"

namespace heart {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnsupportedCard: return "UnsupportedCard";
    case ErrorCode::MissingSupply: return "MissingSupply";
    case ErrorCode::AnnotatorFailure: return "AnnotatorFailure";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MissingWeight: return "MissingWeight";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyScope: return "EmptyScope";
    case ErrorCode::UnknownMetric: return "UnknownMetric";
    case ErrorCode::EmptyFeasibleRegion: return "EmptyFeasibleRegion";
    case ErrorCode::RankCollision: return "RankCollision";
    case ErrorCode::MissingRank: return "MissingRank";
    case ErrorCode::NoObjectiveFound: return "NoObjectiveFound";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::NoMatchedVariables: return "NoMatchedVariables";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::PortBindingMismatch: return "PortBindingMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace heart
