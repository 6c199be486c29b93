#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adept {

enum class ErrorCode {
  UnknownLabel,
  EmptyAfterFilter,
  ManifestParse,
  AlignmentError,
  IndexOutOfRange,
  TooShort,
  UnsupportedFormat,
  SegmentTooShort,
  SegmentOutOfBounds,
  UnknownMetric,
  EmptyCandidateSet,
  AnchorNotInCandidates,
  GroupTooSmall,
  ScriptExhausted,
  PolicyTimeout,
  TransportError,
  MalformedPolicyMessage,
  PreconditionFailed,
  InsufficientData,
  Io,
};

// snake_case name used in observations, logs and JSON artifacts.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adept
