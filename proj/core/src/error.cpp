#include "skelsql/error.hpp"

namespace skelsql {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kFileMissing: return "FileMissing";
    case ErrorCode::kMalformedSchema: return "MalformedSchema";
    case ErrorCode::kUnknownDbId: return "UnknownDbId";
    case ErrorCode::kMalformedExample: return "MalformedExample";
    case ErrorCode::kDbUnreadable: return "DbUnreadable";
    case ErrorCode::kNotAColumn: return "NotAColumn";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kOutsideBall: return "OutsideBall";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptIndex: return "CorruptIndex";
    case ErrorCode::kCredentialMissing: return "CredentialMissing";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kCassetteMiss: return "CassetteMiss";
    case ErrorCode::kHttpError: return "HttpError";
    case ErrorCode::kNotExecutable: return "NotExecutable";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool Error::is_io() const noexcept {
  switch (code_) {
    case ErrorCode::kFileMissing:
    case ErrorCode::kDbUnreadable:
    case ErrorCode::kIoError:
    case ErrorCode::kCorruptIndex:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kMalformedSchema:
    case ErrorCode::kMalformedExample:
      return true;
    default:
      return false;
  }
}

}  // namespace skelsql
