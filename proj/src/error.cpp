#include "icebot/error.hpp"

namespace icebot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::EmptyRoadmap: return "empty_roadmap";
    case ErrorCode::DuplicateLabel: return "duplicate_label";
    case ErrorCode::UnknownView: return "unknown_view";
    case ErrorCode::InvalidStart: return "invalid_start";
    case ErrorCode::Unreachable: return "unreachable";
    case ErrorCode::OffRoadmap: return "off_roadmap";
    case ErrorCode::Busy: return "busy";
    case ErrorCode::TooFewPoints: return "too_few_points";
    case ErrorCode::DegenerateGeometry: return "degenerate_geometry";
    case ErrorCode::EmptyGroup: return "empty_group";
    case ErrorCode::Protocol: return "protocol";
    case ErrorCode::Unauthorized: return "unauthorized";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::TruncatedLog: return "truncated_log";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace icebot
