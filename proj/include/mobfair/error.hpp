#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mobfair {

/// Failure categories raised across the pipeline. The CLI maps them onto exit
/// statuses, the python module onto exception messages.
enum class ErrorCode {
  // panel-core
  DecreasingCumulative,
  ZeroBaseline,
  WindowOutOfRange,
  InsufficientHistory,
  EmptyPanel,
  GapInSeries,
  // ingest
  MalformedHeader,
  NonIntegerCount,
  NegativeTrips,
  UnknownSchema,
  OutOfRange,
  MissingColumn,
  IoFailure,
  // models
  InsufficientData,
  SingularDesign,
  SeriesTooShort,
  NoConvergedFit,
  HorizonExceedsExogLag,
  // backtest / fairness
  EmptySchedule,
  ScheduleOutOfRange,
  NonFiniteValue,
  DegenerateVariable,
  InvalidArgument,
  // cli
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mobfair
