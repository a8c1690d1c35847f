#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uavinspect {

enum class ErrorCode {
  InvalidParameter,
  InvalidChannelCount,
  DimensionMismatch,
  ParseError,
  IoError,
  MissingOrigin,
  TooFewPoints,
  DegenerateGeometry,
  OutOfBounds,
  InvalidMove,
  InvalidEndpoint,
  Unreachable,
  ImageTooSmall,
  TooFewMatches,
  StitchGraphDisconnected,
  PeaksNotFound,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above; the
// C API maps them one-to-one onto uvi_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 protected:
  struct Verbatim {};
  // Uses `message` as what() without the code prefix.
  Error(ErrorCode code, const std::string& message, Verbatim);

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

}  // namespace uavinspect
