#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skelsql {

enum class ErrorCode {
  // ingest
  kFileMissing,
  kMalformedSchema,
  kUnknownDbId,
  kMalformedExample,
  kDbUnreadable,
  kNotAColumn,
  // encoder
  kBackendUnavailable,
  kDimensionMismatch,
  kPreconditionViolation,
  // geometry / relevance
  kNonFiniteInput,
  kOutsideBall,
  kShapeMismatch,
  // index
  kEmptyIndex,
  kIoError,
  kVersionMismatch,
  kCorruptIndex,
  // llm
  kCredentialMissing,
  kScriptExhausted,
  kCassetteMiss,
  kHttpError,
  // executor / harness
  kNotExecutable,
  kConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by files or databases that cannot be read or written.
  bool is_io() const noexcept;

 private:
  ErrorCode code_;
};

}  // namespace skelsql
