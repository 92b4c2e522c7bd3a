#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace irscene {

enum class ErrorCode {
  EmptyRegion,
  ShapeError,
  PlacementError,
  ValueError,
  DegenerateBackground,
  InfeasibleContrast,
  FlatTarget,
  TargetTooSmall,
  ConfigError,
  OcclusionInfeasible,
  NotFound,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::PlacementError: return "PlacementError";
    case ErrorCode::ValueError: return "ValueError";
    case ErrorCode::DegenerateBackground: return "DegenerateBackground";
    case ErrorCode::InfeasibleContrast: return "InfeasibleContrast";
    case ErrorCode::FlatTarget: return "FlatTarget";
    case ErrorCode::TargetTooSmall: return "TargetTooSmall";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::OcclusionInfeasible: return "OcclusionInfeasible";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// batch reports can name it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace irscene
