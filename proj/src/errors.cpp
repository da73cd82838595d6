#include "mce/errors.hpp"

namespace mce {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NoQuotes: return "NoQuotes";
    case ErrorCode::RootNotBracketed: return "RootNotBracketed";
    case ErrorCode::InconsistentStrip: return "InconsistentStrip";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::StaleState: return "StaleState";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::ScheduleBeyondCurve: return "ScheduleBeyondCurve";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroForward: return "ZeroForward";
    case ErrorCode::ZeroValue: return "ZeroValue";
    case ErrorCode::EmptySamples: return "EmptySamples";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::MalformedRecord:
    case ErrorCode::InvariantViolation:
    case ErrorCode::UnknownKey:
    case ErrorCode::OutOfDomain:
    case ErrorCode::UsageError:
    case ErrorCode::NoQuotes:
    case ErrorCode::AlphaOutOfRange:
    case ErrorCode::GridTooCoarse:
    case ErrorCode::ScheduleBeyondCurve:
      return true;
    default:
      return false;
  }
}

}  // namespace mce
