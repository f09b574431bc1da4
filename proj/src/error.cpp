#include "enfpd/error.hpp"

namespace enfpd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kTruncatedStream: return "TruncatedStream";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kSequenceTooShort: return "SequenceTooShort";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kNyquistBoundary: return "NyquistBoundary";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kEmptyBand: return "EmptyBand";
    case ErrorCode::kNotALocalMax: return "NotALocalMax";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kAllDegenerate: return "AllDegenerate";
    case ErrorCode::kInvalidShutter: return "InvalidShutter";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace enfpd
