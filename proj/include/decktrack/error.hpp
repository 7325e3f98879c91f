#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace decktrack {

enum class ErrorCode {
  InvalidArgument,
  TooFewPoints,
  DegenerateConfiguration,
  DegenerateGeometry,
  SingularCamera,
  EmptyInput,
  RayParallelToDeck,
  IntersectionBehindCamera,
  NoConvergence,
  NoEstimate,
  InvalidBinConfig,
  DimensionMismatch,
  InvalidRig,
  OutOfRange,
  IdMismatch,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SingularCamera: return "SingularCamera";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RayParallelToDeck: return "RayParallelToDeck";
    case ErrorCode::IntersectionBehindCamera: return "IntersectionBehindCamera";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoEstimate: return "NoEstimate";
    case ErrorCode::InvalidBinConfig: return "InvalidBinConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidRig: return "InvalidRig";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace decktrack
