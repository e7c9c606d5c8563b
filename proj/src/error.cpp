#include "entlab/error.hpp"

namespace entlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::BadAngle: return "BadAngle";
    case ErrorCode::NotPowerBounded: return "NotPowerBounded";
    case ErrorCode::SpectralFailure: return "SpectralFailure";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::NotSurjective: return "NotSurjective";
    case ErrorCode::EmptyAlpha: return "EmptyAlpha";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::NotBoundedSemigroup: return "NotBoundedSemigroup";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace entlab
