#include "mobfair/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "csv.hpp"
#include "mobfair/error.hpp"
#include "mobfair/log.hpp"

namespace mobfair::backtest {

std::string_view model_label(ModelKind model) {
  return model == ModelKind::LinReg ? "linreg" : "arimax";
}

ModelKind parse_model(std::string_view label) {
  if (label == "linreg") return ModelKind::LinReg;
  if (label == "arimax") return ModelKind::Arimax;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown model '{}'", label));
}

std::string_view period_label(PeriodType type) {
  return type == PeriodType::Week ? "week" : "month";
}

namespace {

struct TaskOutput {
  std::vector<ForecastRecord> records;
  std::vector<FitFailure> failures;
  std::size_t ok = 0;
};

double actual_value(const PanelDataset::Unit& u, std::ptrdiff_t origin, int h, TargetKind target) {
  const auto o = static_cast<std::size_t>(origin);
  const auto later = static_cast<double>(u.cumulative.at(o + static_cast<std::size_t>(h)));
  return target == TargetKind::Incident ? later - static_cast<double>(u.cumulative[o]) : later;
}

std::vector<double> linreg_predictions(const PanelDataset& panel, std::size_t unit,
                                       DateIndex origin, const ModelSpec& spec) {
  const auto fit = linreg::fit_distributed_lag(panel, unit, origin, spec.lags, spec.linreg);
  const auto targets =
      linreg::forecast_targets(fit, panel, unit, spec.horizons, spec.linreg.freeze_mobility);
  std::vector<double> out;
  for (const auto& t : targets) {
    out.push_back(spec.target == TargetKind::Incident ? t.predicted_incident
                                                      : t.predicted_cumulative);
  }
  return out;
}

std::vector<double> arimax_predictions(const PanelDataset& panel, std::size_t unit,
                                       DateIndex origin, const ModelSpec& spec) {
  const auto& u = panel.unit(unit);
  const auto& cfg = spec.arimax;
  const std::ptrdiff_t o = panel.index_of(origin);
  const std::ptrdiff_t start = o - cfg.window_days + 1;
  const int lag = cfg.exog_lag_days;
  const std::ptrdiff_t earliest = std::max<std::ptrdiff_t>(spec.arimax_on_cumulative ? 0 : 1,
                                                           spec.arimax_use_exog ? lag : 0);
  if (start < earliest) {
    throw Error(ErrorCode::InsufficientHistory,
                fmt::format("ARIMAX window needs {} days before the origin", o - start + earliest));
  }
  std::vector<double> y;
  std::vector<double> x;
  for (std::ptrdiff_t t = start; t <= o; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    y.push_back(spec.arimax_on_cumulative
                    ? static_cast<double>(u.cumulative[ti])
                    : static_cast<double>(u.cumulative[ti] - u.cumulative[ti - 1]));
    if (spec.arimax_use_exog) x.push_back(u.change[static_cast<std::size_t>(t - lag)]);
  }
  const int max_h = *std::max_element(spec.horizons.begin(), spec.horizons.end());
  std::vector<double> x_future;
  if (spec.arimax_use_exog) {
    for (int k = 1; k <= max_h; ++k) {
      x_future.push_back(u.change.at(static_cast<std::size_t>(o + k - lag)));
    }
  }
  auto fit = arimax::auto_fit(y, x, cfg);
  fit.unit = u.id;
  fit.origin = origin;
  const auto steps = arimax::forecast(fit, y, x, x_future, max_h, lag);

  const double cum_origin = static_cast<double>(u.cumulative[static_cast<std::size_t>(o)]);
  std::vector<double> out;
  for (int h : spec.horizons) {
    double incident = 0.0;
    if (spec.arimax_on_cumulative) {
      incident = steps[static_cast<std::size_t>(h - 1)] - cum_origin;
    } else {
      incident = std::accumulate(steps.begin(), steps.begin() + h, 0.0);
    }
    out.push_back(spec.target == TargetKind::Incident ? incident : cum_origin + incident);
  }
  return out;
}

TaskOutput run_task(const PanelDataset& panel, const ModelSpec& spec, std::size_t unit,
                    DateIndex origin) {
  TaskOutput out;
  const auto& u = panel.unit(unit);
  const std::ptrdiff_t o = panel.index_of(origin);
  for (ModelKind model : spec.models) {
    try {
      const auto predicted = model == ModelKind::LinReg
                                 ? linreg_predictions(panel, unit, origin, spec)
                                 : arimax_predictions(panel, unit, origin, spec);
      for (std::size_t i = 0; i < spec.horizons.size(); ++i) {
        const int h = spec.horizons[i];
        out.records.push_back(
            {model, u.id, origin, h, predicted[i], actual_value(u, o, h, spec.target)});
      }
      ++out.ok;
    } catch (const Error& e) {
      out.failures.push_back({model, u.id, origin, e.what()});
    }
  }
  return out;
}

}  // namespace

BacktestResult run_backtest(const PanelDataset& panel, const ModelSpec& spec,
                            const Schedule& schedule, int workers) {
  if (spec.models.empty() || spec.horizons.empty() || schedule.last < schedule.first ||
      schedule.step < 1 || panel.size() == 0) {
    throw Error(ErrorCode::EmptySchedule, "nothing to evaluate");
  }
  for (int h : spec.horizons) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, fmt::format("horizon {} < 1", h));
  }
  const int max_h = *std::max_element(spec.horizons.begin(), spec.horizons.end());
  const auto& span = panel.date_span();
  if (schedule.first < span.first || schedule.last + max_h > span.last) {
    throw Error(ErrorCode::ScheduleOutOfRange,
                fmt::format("origins {}..{} (+{} days of actuals) fall outside the data {}..{}",
                            format_date(schedule.first), format_date(schedule.last), max_h,
                            format_date(span.first), format_date(span.last)));
  }
  spec.lags.validate();
  if (std::find(spec.models.begin(), spec.models.end(), ModelKind::Arimax) != spec.models.end()) {
    spec.arimax.validate();
  }

  std::vector<DateIndex> origins;
  for (DateIndex d = schedule.first; d <= schedule.last; d = d + schedule.step) {
    origins.push_back(d);
  }
  const std::size_t n_tasks = panel.size() * origins.size();
  std::vector<TaskOutput> outputs(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      outputs[i] = run_task(panel, spec, i / origins.size(), origins[i % origins.size()]);
    }
  };
  const int n_workers = std::max(1, workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BacktestResult result;
  result.report.tasks = n_tasks * spec.models.size();
  for (auto& o : outputs) {
    result.report.fits_ok += o.ok;
    result.report.fits_failed += o.failures.size();
    std::move(o.records.begin(), o.records.end(), std::back_inserter(result.records));
    std::move(o.failures.begin(), o.failures.end(), std::back_inserter(result.report.failures));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const ForecastRecord& a, const ForecastRecord& b) {
              return std::tie(a.model, a.unit, a.origin, a.horizon) <
                     std::tie(b.model, b.unit, b.origin, b.horizon);
            });
  std::sort(result.report.failures.begin(), result.report.failures.end(),
            [](const FitFailure& a, const FitFailure& b) {
              return std::tie(a.model, a.unit, a.origin) < std::tie(b.model, b.unit, b.origin);
            });
  if (result.report.fits_failed > 0) {
    log().info("backtest: {} of {} fits failed", result.report.fits_failed, result.report.tasks);
  }
  return result;
}

std::optional<double> error_rate(double predicted, double actual) {
  if (!(actual > 0.0)) return std::nullopt;
  return std::abs(predicted - actual) / actual;
}

ErrorSet compute_errors(const std::vector<ForecastRecord>& records) {
  ErrorSet out;
  for (const auto& r : records) {
    if (auto e = error_rate(r.predicted, r.actual)) {
      out.errors.push_back({r.model, r.unit, r.origin, r.horizon, *e});
    } else {
      out.skipped.push_back(r);
    }
  }
  return out;
}

namespace {

DateIndex bucket_start(PeriodType type, DateIndex d) {
  if (type == PeriodType::Week) return iso_week_start(d);
  return month_range(year_of(d), month_of(d)).first;
}

std::string bucket_label(PeriodType type, DateIndex d) {
  return type == PeriodType::Week ? iso_week_label(d) : month_label(d);
}

struct Bucket {
  double sum = 0.0;
  int n = 0;
  int skipped = 0;
};

std::vector<MapeEntry> bucketed(PeriodType type, const ErrorSet& errors, ModelKind model,
                                const UnitId& unit, int horizon, int min_obs) {
  std::map<DateIndex, Bucket> buckets;
  for (const auto& e : errors.errors) {
    if (e.model != model || e.horizon != horizon || e.unit != unit) continue;
    auto& b = buckets[bucket_start(type, e.origin)];
    b.sum += e.error_rate;
    ++b.n;
  }
  for (const auto& r : errors.skipped) {
    if (r.model != model || r.horizon != horizon || r.unit != unit) continue;
    ++buckets[bucket_start(type, r.origin)].skipped;
  }
  std::vector<MapeEntry> out;
  for (const auto& [start, b] : buckets) {
    if (b.n < min_obs || b.n == 0) continue;
    out.push_back({model, unit, horizon, type, bucket_label(type, start), start,
                   100.0 * b.sum / b.n, b.n, b.skipped});
  }
  return out;
}

}  // namespace

std::vector<MapeEntry> weekly_mape(const ErrorSet& errors, ModelKind model, const UnitId& unit,
                                   int horizon, int min_obs) {
  return bucketed(PeriodType::Week, errors, model, unit, horizon, min_obs);
}

std::vector<MapeEntry> monthly_mape(const ErrorSet& errors, ModelKind model, const UnitId& unit,
                                    int horizon, int min_obs) {
  return bucketed(PeriodType::Month, errors, model, unit, horizon, min_obs);
}

std::vector<MapeEntry> all_mape(const ErrorSet& errors, int min_obs) {
  // One pass grouping by (model, unit, horizon, period type, period start).
  using Key = std::tuple<ModelKind, UnitId, int, PeriodType, DateIndex>;
  std::map<Key, Bucket> buckets;
  for (PeriodType type : {PeriodType::Week, PeriodType::Month}) {
    for (const auto& e : errors.errors) {
      auto& b = buckets[{e.model, e.unit, e.horizon, type, bucket_start(type, e.origin)}];
      b.sum += e.error_rate;
      ++b.n;
    }
    for (const auto& r : errors.skipped) {
      ++buckets[{r.model, r.unit, r.horizon, type, bucket_start(type, r.origin)}].skipped;
    }
  }
  std::vector<MapeEntry> out;
  for (const auto& [key, b] : buckets) {
    if (b.n < min_obs || b.n == 0) continue;
    const auto& [model, unit, horizon, type, start] = key;
    out.push_back({model, unit, horizon, type, bucket_label(type, start), start,
                   100.0 * b.sum / b.n, b.n, b.skipped});
  }
  return out;
}

DateIndex period_start_from_label(PeriodType type, std::string_view label) {
  auto fail = [&] {
    return Error(ErrorCode::InvalidArgument, fmt::format("bad period label '{}'", label));
  };
  if (type == PeriodType::Month) {
    DateIndex d;
    if (label.size() != 7 || !try_parse_date(fmt::format("{}-01", label), d)) throw fail();
    return d;
  }
  if (label.size() != 8 || label[4] != '-' || label[5] != 'W') throw fail();
  const auto year = csv::to_int(label.substr(0, 4));
  const auto week = csv::to_int(label.substr(6, 2));
  DateIndex jan4;
  if (!year || !week || *week < 1 || *week > 53 ||
      !try_parse_date(fmt::format("{:04d}-01-04", *year), jan4)) {
    throw fail();
  }
  return iso_week_start(jan4) + static_cast<int>(7 * (*week - 1));
}

void write_forecasts(const std::filesystem::path& path,
                     const std::vector<ForecastRecord>& records) {
  auto out = csv::open_for_write(path);
  out << "model,unit_id,origin_date,horizon,predicted,actual\n";
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{},{}\n", model_label(r.model), r.unit.value,
                       format_date(r.origin), r.horizon, r.predicted, r.actual);
  }
  csv::finish(out, path);
}

void write_errors(const std::filesystem::path& path, const ErrorSet& errors) {
  auto out = csv::open_for_write(path);
  out << "model,unit_id,origin_date,horizon,error_rate\n";
  for (const auto& e : errors.errors) {
    out << fmt::format("{},{},{},{},{}\n", model_label(e.model), e.unit.value,
                       format_date(e.origin), e.horizon, e.error_rate);
  }
  csv::finish(out, path);
}

void write_mape(const std::filesystem::path& path, const std::vector<MapeEntry>& entries) {
  auto out = csv::open_for_write(path);
  out << "model,unit_id,horizon,period_type,period,mape,n_obs,n_skipped\n";
  for (const auto& m : entries) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", model_label(m.model), m.unit.value, m.horizon,
                       period_label(m.period_type), m.period, m.mape, m.n_obs, m.n_skipped);
  }
  csv::finish(out, path);
}

std::vector<MapeEntry> read_mape(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const std::vector<std::string> expected{"model",  "unit_id", "horizon", "period_type",
                                          "period", "mape",    "n_obs",   "n_skipped"};
  if (reader.header() != expected) {
    throw Error(ErrorCode::MalformedHeader,
                fmt::format("{}: unexpected header", path.filename().string()));
  }
  std::vector<MapeEntry> out;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != expected.size()) {
      throw Error(ErrorCode::MalformedHeader,
                  fmt::format("{}:{}: wrong field count", path.filename().string(), reader.line()));
    }
    MapeEntry m;
    m.model = parse_model(row[0]);
    m.unit = UnitId{row[1]};
    const auto horizon = csv::to_int(row[2]);
    const auto mape = csv::to_double(row[5]);
    const auto n_obs = csv::to_int(row[6]);
    const auto n_skipped = csv::to_int(row[7]);
    if (!horizon || !mape || !n_obs || !n_skipped || (row[3] != "week" && row[3] != "month")) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}:{}: malformed row", path.filename().string(), reader.line()));
    }
    m.horizon = static_cast<int>(*horizon);
    m.period_type = row[3] == "week" ? PeriodType::Week : PeriodType::Month;
    m.period = row[4];
    m.period_start = period_start_from_label(m.period_type, m.period);
    m.mape = *mape;
    m.n_obs = static_cast<int>(*n_obs);
    m.n_skipped = static_cast<int>(*n_skipped);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mobfair::backtest
