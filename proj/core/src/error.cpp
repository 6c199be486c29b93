#include "adept/error.hpp"

namespace adept {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownLabel: return "unknown_label";
    case ErrorCode::EmptyAfterFilter: return "empty_after_filter";
    case ErrorCode::ManifestParse: return "manifest_parse";
    case ErrorCode::AlignmentError: return "alignment_error";
    case ErrorCode::IndexOutOfRange: return "index_out_of_range";
    case ErrorCode::TooShort: return "too_short";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::SegmentTooShort: return "segment_too_short";
    case ErrorCode::SegmentOutOfBounds: return "segment_out_of_bounds";
    case ErrorCode::UnknownMetric: return "unknown_metric";
    case ErrorCode::EmptyCandidateSet: return "empty_candidate_set";
    case ErrorCode::AnchorNotInCandidates: return "anchor_not_in_candidates";
    case ErrorCode::GroupTooSmall: return "group_too_small";
    case ErrorCode::ScriptExhausted: return "script_exhausted";
    case ErrorCode::PolicyTimeout: return "policy_timeout";
    case ErrorCode::TransportError: return "transport_error";
    case ErrorCode::MalformedPolicyMessage: return "malformed_policy_message";
    case ErrorCode::PreconditionFailed: return "precondition_failed";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::Io: return "io_error";
  }
  return "unknown_error";
}

}  // namespace adept
