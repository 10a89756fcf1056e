#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rshift {

enum class ErrorCode {
  // validation
  InvalidParameter,
  InvalidScenario,
  LengthMismatch,
  TooFewPoints,
  ConfigError,
  DataError,
  // geometry
  EmptyIntersection,
  NoPairs,
  InfeasibleSeparation,
  // numerical
  NotPositiveDefinite,
  RankDeficientDesign,
  OptimizerDiverged,
  VariogramFitFailed,
  EmptyNeighborhood,
  SingularSystem,
  DegenerateAux,
  ShiftExhausted,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes that stem from bad input rather than a numerical breakdown.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DataError: return "DataError";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::InfeasibleSeparation: return "InfeasibleSeparation";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::OptimizerDiverged: return "OptimizerDiverged";
    case ErrorCode::VariogramFitFailed: return "VariogramFitFailed";
    case ErrorCode::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DegenerateAux: return "DegenerateAux";
    case ErrorCode::ShiftExhausted: return "ShiftExhausted";
  }
  return "Unknown";
}

inline bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::InvalidScenario:
    case ErrorCode::LengthMismatch:
    case ErrorCode::TooFewPoints:
    case ErrorCode::ConfigError:
    case ErrorCode::DataError:
    case ErrorCode::InfeasibleSeparation:
      return true;
    default:
      return false;
  }
}

}  // namespace rshift
