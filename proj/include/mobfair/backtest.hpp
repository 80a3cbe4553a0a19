#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobfair/arimax.hpp"
#include "mobfair/linreg.hpp"
#include "mobfair/panel.hpp"

namespace mobfair::backtest {

enum class ModelKind { LinReg, Arimax };

std::string_view model_label(ModelKind model);
/// "linreg" / "arimax"; throws InvalidArgument otherwise.
ModelKind parse_model(std::string_view label);

/// What the forecast is scored against.
enum class TargetKind {
  /// h=1: new cases on origin+1; h=7: new cases over origin+1..origin+7.
  Incident,
  /// Cumulative count on origin+h.
  Cumulative,
};

struct ModelSpec {
  std::vector<ModelKind> models{ModelKind::LinReg, ModelKind::Arimax};
  std::vector<int> horizons{1, 7};
  TargetKind target = TargetKind::Incident;
  linreg::LagSpec lags;
  linreg::LinRegConfig linreg;
  arimax::ArimaxConfig arimax;
  /// Fit the ARIMAX model to cumulative instead of daily new cases.
  bool arimax_on_cumulative = false;
  bool arimax_use_exog = true;
};

/// Origins first..last stepping by `step` days.
struct Schedule {
  DateIndex first;
  DateIndex last;
  int step = 1;
};

struct ForecastRecord {
  ModelKind model = ModelKind::LinReg;
  UnitId unit;
  DateIndex origin;
  int horizon = 1;
  double predicted = 0.0;
  double actual = 0.0;
};

struct FitFailure {
  ModelKind model = ModelKind::LinReg;
  UnitId unit;
  DateIndex origin;
  std::string reason;
};

struct RunReport {
  std::size_t tasks = 0;
  std::size_t fits_ok = 0;
  std::size_t fits_failed = 0;
  std::vector<FitFailure> failures;
};

struct BacktestResult {
  std::vector<ForecastRecord> records;
  RunReport report;
};

/// Fits every scheduled (unit, origin) for each selected model and pairs the
/// forecasts with panel ground truth. Failed fits are reported, not thrown.
/// Output is sorted by (model, unit, origin, horizon) for any worker count.
BacktestResult run_backtest(const PanelDataset& panel, const ModelSpec& spec,
                            const Schedule& schedule, int workers = 1);

/// |predicted - actual| / actual, or nullopt when actual is not positive.
std::optional<double> error_rate(double predicted, double actual);

struct ErrorRecord {
  ModelKind model = ModelKind::LinReg;
  UnitId unit;
  DateIndex origin;
  int horizon = 1;
  double error_rate = 0.0;
};

struct ErrorSet {
  std::vector<ErrorRecord> errors;
  /// Records whose actual was zero.
  std::vector<ForecastRecord> skipped;
};

ErrorSet compute_errors(const std::vector<ForecastRecord>& records);

enum class PeriodType { Week, Month };

std::string_view period_label(PeriodType type);

struct MapeEntry {
  ModelKind model = ModelKind::LinReg;
  UnitId unit;
  int horizon = 1;
  PeriodType period_type = PeriodType::Week;
  std::string period;       // "2020-W15" or "2020-04"
  DateIndex period_start;   // Monday of the ISO week / first of the month
  double mape = 0.0;        // percent
  int n_obs = 0;
  int n_skipped = 0;
};

/// Records are bucketed by their origin date.
std::vector<MapeEntry> weekly_mape(const ErrorSet& errors, ModelKind model, const UnitId& unit,
                                   int horizon, int min_obs = 3);
std::vector<MapeEntry> monthly_mape(const ErrorSet& errors, ModelKind model, const UnitId& unit,
                                    int horizon, int min_obs = 3);
/// Weekly then monthly entries for every (model, unit, horizon) present.
std::vector<MapeEntry> all_mape(const ErrorSet& errors, int min_obs = 3);

/// Parses "2020-W15" or "2020-04" back to the period's first day.
DateIndex period_start_from_label(PeriodType type, std::string_view label);

void write_forecasts(const std::filesystem::path& path, const std::vector<ForecastRecord>& records);
void write_errors(const std::filesystem::path& path, const ErrorSet& errors);
void write_mape(const std::filesystem::path& path, const std::vector<MapeEntry>& entries);
std::vector<MapeEntry> read_mape(const std::filesystem::path& path);

}  // namespace mobfair::backtest
