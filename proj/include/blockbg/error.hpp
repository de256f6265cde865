#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockbg {

enum class ErrorCode {
  MalformedHeader,
  UnsupportedMaxval,
  TruncatedPayload,
  FrameTooSmall,
  SequenceTooShort,
  InconsistentSequence,
  ReadFailed,
  WriteFailed,
  EmptyRegion,
  ShapeMismatch,
  InvalidParameter,
  IndexOutOfRange,
  ModelIncomplete,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "malformed-header";
    case ErrorCode::UnsupportedMaxval: return "unsupported-maxval";
    case ErrorCode::TruncatedPayload: return "truncated-payload";
    case ErrorCode::FrameTooSmall: return "frame-too-small";
    case ErrorCode::SequenceTooShort: return "sequence-too-short";
    case ErrorCode::InconsistentSequence: return "inconsistent-sequence";
    case ErrorCode::ReadFailed: return "read-failed";
    case ErrorCode::WriteFailed: return "write-failed";
    case ErrorCode::EmptyRegion: return "empty-region";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::ModelIncomplete: return "model-incomplete";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// message names the specific defect (offending file, index or value).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blockbg
