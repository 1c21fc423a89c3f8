#pragma once

#include <stdexcept>
#include <string>

namespace smswap {

enum class ErrorKind {
  InvalidArgument,
  InvalidModel,
  SurvivalUnderflow,
  TruncationError,
  GridMismatch,
  PositivityBreach,
  DimensionTooLarge,
  NegativeVariance,
  DegenerateMean,
  NormalizationCheckFailed,
  PathExplosion,
  CorrelationOutOfRange,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Everything the library throws on a contract violation or numerical failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace smswap
