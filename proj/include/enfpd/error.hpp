#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace enfpd {

enum class ErrorCode {
  kFileNotFound,
  kMalformedHeader,
  kTruncatedStream,
  kEmptySequence,
  kInvalidConfig,
  kSequenceTooShort,
  kEmptyRegion,
  kNyquistBoundary,
  kSeriesTooShort,
  kEmptyBand,
  kNotALocalMax,
  kLengthMismatch,
  kEmptyMatrix,
  kTooFewRows,
  kAllDegenerate,
  kInvalidShutter,
  kSingleClass,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the failure class so callers (CLI, evaluation harness) can triage.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace enfpd
