#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kahlercap {

enum class ErrorCode {
  AllZero,
  AtInfinity,
  ResolutionTooSmall,
  GridMismatch,
  AllSentinel,
  SentinelInStencil,
  NotProbability,
  CollarMismatch,
  NotCertified,
  SentinelPresent,
  RangeViolation,
  BallTouchesBoundary,
  ConvergenceFailure,
  NotMonotoneFamily,
  NotCircled,
  PolarSet,
  QuadratureUnderresolved,
  EmptyRegion,
  NormalizationInfeasible,
  GramSingular,
  DegreeMismatch,
  DegenerateLift,
  ZeroVolume,
  EmptyRange,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure the library surfaces carries the code and the operation that raised it.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string operation, const std::string& detail)
      : std::runtime_error(std::string(operation) + ": " + std::string(to_string(code)) +
                           (detail.empty() ? "" : " (" + detail + ")")),
        code_(code),
        operation_(std::move(operation)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& operation() const noexcept { return operation_; }

private:
  ErrorCode code_;
  std::string operation_;
};

}  // namespace kahlercap
