#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fiscal {

enum class ErrorCode {
  EmptyFile,
  MissingCell,
  DuplicateRow,
  UnparsableNumber,
  UnknownVariable,
  DegenerateSplit,
  EmptyGroup,
  SeriesTooShort,
  NonFiniteInput,
  ZeroTrend,
  ZeroVariance,
  TooFewUnits,
  CollinearRegressors,
  InsufficientDegreesOfFreedom,
  DegenerateVariance,
  InsufficientObservations,
  RankDeficient,
  InconsistentCoefficientSets,
  UnitFailures,
  NonStationaryInertia,
  NonPositiveGrossRate,
  HorizonZero,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::DuplicateRow: return "DuplicateRow";
    case ErrorCode::UnparsableNumber: return "UnparsableNumber";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ZeroTrend: return "ZeroTrend";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewUnits: return "TooFewUnits";
    case ErrorCode::CollinearRegressors: return "CollinearRegressors";
    case ErrorCode::InsufficientDegreesOfFreedom: return "InsufficientDegreesOfFreedom";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::InsufficientObservations: return "InsufficientObservations";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InconsistentCoefficientSets: return "InconsistentCoefficientSets";
    case ErrorCode::UnitFailures: return "UnitFailures";
    case ErrorCode::NonStationaryInertia: return "NonStationaryInertia";
    case ErrorCode::NonPositiveGrossRate: return "NonPositiveGrossRate";
    case ErrorCode::HorizonZero: return "HorizonZero";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this type; `code()` is
/// stable and meant for programmatic handling, `what()` for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix, for re-wrapping with more context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// Warnings go through a replaceable sink so tests and the CLI can capture them.
using WarningSink = std::function<void(std::string_view)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

inline void warn(std::string_view msg) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace fiscal
