#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corrbandit {

enum class ErrorCode {
  NotSquare,
  TooFewArms,
  NotSymmetric,
  NotPSD,
  NonPositiveVariance,
  InvalidPair,
  InvalidArm,
  InvalidIndex,
  ZeroVariance,
  UnknownId,
  RhoOutOfRange,
  NoSamples,
  DegenerateVariance,
  MissingPair,
  BudgetTooSmall,
  NonPositiveGap,
  DegenerateGaps,
  SingularMatrix,
  DimensionMismatch,
  EmptySamples,
  ParseError,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::TooFewArms: return "TooFewArms";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::InvalidPair: return "InvalidPair";
    case ErrorCode::InvalidArm: return "InvalidArm";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::MissingPair: return "MissingPair";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::NonPositiveGap: return "NonPositiveGap";
    case ErrorCode::DegenerateGaps: return "DegenerateGaps";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. Every failure in the library
/// is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace corrbandit
