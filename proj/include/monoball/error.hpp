#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace monoball {

enum class ErrorCode {
  InvalidCalibration,
  NonPositiveDepth,
  DegenerateDirection,
  NoGroundIntersection,
  NonPositiveDt,
  NonPositiveFlightTime,
  NegativeInput,
  IllegalEdge,
  EmptyFrame,
  BeamExtinct,
  ConfigInvalid,
  LengthMismatch,
  RangeMismatch,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidCalibration: return "InvalidCalibration";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::NoGroundIntersection: return "NoGroundIntersection";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::NonPositiveFlightTime: return "NonPositiveFlightTime";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::IllegalEdge: return "IllegalEdge";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::BeamExtinct: return "BeamExtinct";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RangeMismatch: return "RangeMismatch";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace monoball
