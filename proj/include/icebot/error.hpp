#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icebot {

enum class ErrorCode {
  InvalidArgument,
  EmptyRoadmap,
  DuplicateLabel,
  UnknownView,
  InvalidStart,
  Unreachable,
  OffRoadmap,
  Busy,
  TooFewPoints,
  DegenerateGeometry,
  EmptyGroup,
  Protocol,
  Unauthorized,
  VersionMismatch,
  TruncatedLog,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for every recoverable failure in the library; the code
// is what callers (wire protocol, python bindings) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace icebot
