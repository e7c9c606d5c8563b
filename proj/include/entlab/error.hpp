#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entlab {

enum class ErrorCode {
  DimensionMismatch,
  NonConvergence,
  Overflow,
  IllConditioned,
  BadAngle,
  NotPowerBounded,
  SpectralFailure,
  NotUnimodular,
  NotSurjective,
  EmptyAlpha,
  BudgetExceeded,
  NotInvertible,
  EmptySequence,
  NotBoundedSemigroup,
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace entlab
