#pragma once

#include <stdexcept>
#include <string>

namespace rapid {

enum class ErrorCode {
  MalformedScan,
  LabelMismatch,
  NonFinite,
  EmptyScene,
  Format,
  InsufficientPoints,
  UndefinedAngle,
  LabelsRequired,
  Contract,
  UndefinedMetric,
  InvalidArgument,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedScan: return "malformed-scan";
    case ErrorCode::LabelMismatch: return "label-mismatch";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::EmptyScene: return "empty-scene";
    case ErrorCode::Format: return "format";
    case ErrorCode::InsufficientPoints: return "insufficient-points";
    case ErrorCode::UndefinedAngle: return "undefined-angle";
    case ErrorCode::LabelsRequired: return "labels-required";
    case ErrorCode::Contract: return "contract";
    case ErrorCode::UndefinedMetric: return "undefined-metric";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace rapid
