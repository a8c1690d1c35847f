#include "uavinspect/error.hpp"

namespace uavinspect {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidChannelCount: return "InvalidChannelCount";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingOrigin: return "MissingOrigin";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidMove: return "InvalidMove";
    case ErrorCode::InvalidEndpoint: return "InvalidEndpoint";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::TooFewMatches: return "TooFewMatches";
    case ErrorCode::StitchGraphDisconnected: return "StitchGraphDisconnected";
    case ErrorCode::PeaksNotFound: return "PeaksNotFound";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error::Error(ErrorCode code, const std::string& message, Verbatim) : std::runtime_error(message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace uavinspect
