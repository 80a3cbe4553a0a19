#include "mobfair/error.hpp"

namespace mobfair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DecreasingCumulative: return "DecreasingCumulative";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::EmptyPanel: return "EmptyPanel";
    case ErrorCode::GapInSeries: return "GapInSeries";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonIntegerCount: return "NonIntegerCount";
    case ErrorCode::NegativeTrips: return "NegativeTrips";
    case ErrorCode::UnknownSchema: return "UnknownSchema";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NoConvergedFit: return "NoConvergedFit";
    case ErrorCode::HorizonExceedsExogLag: return "HorizonExceedsExogLag";
    case ErrorCode::EmptySchedule: return "EmptySchedule";
    case ErrorCode::ScheduleOutOfRange: return "ScheduleOutOfRange";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DegenerateVariable: return "DegenerateVariable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace mobfair
