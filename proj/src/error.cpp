#include "hpsfde/error.hpp"

namespace hpsfde {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
        case ErrorCode::RowSumNonZero: return "RowSumNonZero";
        case ErrorCode::ReducibleChain: return "ReducibleChain";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::PathExploded: return "PathExploded";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::QuadratureUnsupported: return "QuadratureUnsupported";
        case ErrorCode::UnsupportedMeasure: return "UnsupportedMeasure";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::InsufficientPaths: return "InsufficientPaths";
        case ErrorCode::NotApplicable: return "NotApplicable";
        case ErrorCode::ZeroEpsilon: return "ZeroEpsilon";
        case ErrorCode::NonPositiveDenominator: return "NonPositiveDenominator";
        case ErrorCode::AllExploded: return "AllExploded";
        case ErrorCode::DegenerateWindow: return "DegenerateWindow";
        case ErrorCode::ExplosionBudgetExceeded: return "ExplosionBudgetExceeded";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace hpsfde
