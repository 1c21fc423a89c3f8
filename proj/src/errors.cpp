#include "smswap/errors.hpp"

namespace smswap {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::SurvivalUnderflow: return "SurvivalUnderflow";
    case ErrorKind::TruncationError: return "TruncationError";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::PositivityBreach: return "PositivityBreach";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::NegativeVariance: return "NegativeVariance";
    case ErrorKind::DegenerateMean: return "DegenerateMean";
    case ErrorKind::NormalizationCheckFailed: return "NormalizationCheckFailed";
    case ErrorKind::PathExplosion: return "PathExplosion";
    case ErrorKind::CorrelationOutOfRange: return "CorrelationOutOfRange";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace smswap
