#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mce {

/// Failure categories surfaced by the engine. Validation failures map to
/// CLI exit code 2, computation failures to exit code 1.
enum class ErrorCode {
  // input / validation
  FileNotFound,
  MalformedRecord,
  InvariantViolation,
  UnknownKey,
  OutOfDomain,
  UsageError,
  IoError,
  // curves
  NoQuotes,
  RootNotBracketed,
  InconsistentStrip,
  // model
  InvalidInterval,
  NonPositiveDt,
  StaleState,
  EmptyGrid,
  // pricing
  ScheduleBeyondCurve,
  AlphaOutOfRange,
  GridTooCoarse,
  NoConvergence,
  ZeroForward,
  // haircuts
  ZeroValue,
  EmptySamples,
};

std::string_view to_string(ErrorCode code);

/// True for codes that signal bad input rather than a numerical failure.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mce
