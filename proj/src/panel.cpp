#include "mobfair/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mobfair/error.hpp"
#include "mobfair/log.hpp"

namespace mobfair {

const std::vector<std::string>& standard_covariates() {
  static const std::vector<std::string> names{"income",    "smartphone_pct", "population",
                                              "education_pct", "nchs",       "median_age"};
  return names;
}

std::optional<double> covariate_value(const DemographicRecord& rec, const std::string& name) {
  if (name == "income") return rec.income;
  if (name == "smartphone_pct") return rec.smartphone_pct;
  if (name == "population") return rec.population;
  if (name == "education_pct") return rec.education_pct;
  if (name == "nchs") return static_cast<double>(rec.nchs);
  if (name == "median_age") return rec.median_age;
  if (auto it = rec.extra.find(name); it != rec.extra.end() && std::isfinite(it->second)) {
    return it->second;
  }
  return std::nullopt;
}

std::vector<std::optional<std::int64_t>> derive_incident(const CaseSeries& cases) {
  std::vector<std::optional<std::int64_t>> out(cases.cumulative.size());
  for (std::size_t t = 1; t < cases.cumulative.size(); ++t) {
    const auto diff = cases.cumulative[t] - cases.cumulative[t - 1];
    if (diff < 0) {
      throw Error(ErrorCode::DecreasingCumulative,
                  fmt::format("unit {} on {}: {} -> {}", cases.unit.value,
                              format_date(cases.first + static_cast<int>(t)),
                              cases.cumulative[t - 1], cases.cumulative[t]));
    }
    out[t] = diff;
  }
  return out;
}

std::vector<double> normalize_mobility(std::span<const double> trips, DateIndex series_first,
                                       const DateRange& baseline) {
  const DateRange series{series_first, series_first + static_cast<int>(trips.size()) - 1};
  if (trips.empty() || baseline.last < baseline.first || !series.contains(baseline)) {
    throw Error(ErrorCode::WindowOutOfRange,
                fmt::format("baseline {}..{} outside series {}..{}", format_date(baseline.first),
                            format_date(baseline.last), format_date(series.first),
                            format_date(series.last)));
  }
  const auto begin = trips.begin() + (baseline.first - series_first);
  const auto end = begin + baseline.length();
  const double mean = std::accumulate(begin, end, 0.0) / baseline.length();
  if (std::isnan(mean)) {
    throw Error(ErrorCode::GapInSeries, "missing days inside the baseline window");
  }
  if (!(mean > 0.0)) {
    throw Error(ErrorCode::ZeroBaseline, "baseline mean trip volume is zero");
  }
  std::vector<double> change(trips.size());
  std::transform(trips.begin(), trips.end(), change.begin(),
                 [mean](double v) { return v / mean; });
  return change;
}

MobilitySeries normalized(MobilitySeries raw, const DateRange& baseline) {
  try {
    raw.change = normalize_mobility(raw.trips, raw.first, baseline);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("unit {}: {}", raw.unit.value, e.what()));
  }
  return raw;
}

double lag_window_average(std::span<const double> change, std::ptrdiff_t t, int lag_from,
                          int lag_to) {
  if (lag_from < 1 || lag_to < lag_from) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("invalid lag band {}-{}", lag_from, lag_to));
  }
  const std::ptrdiff_t lo = t - lag_to;
  const std::ptrdiff_t hi = t - lag_from;
  if (lo < 0 || hi >= static_cast<std::ptrdiff_t>(change.size())) {
    throw Error(ErrorCode::InsufficientHistory,
                fmt::format("lags {}-{} at index {} leave the series", lag_from, lag_to, t));
  }
  double sum = 0.0;
  for (std::ptrdiff_t i = lo; i <= hi; ++i) sum += change[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(hi - lo + 1);
}

double lag_window_average(std::span<const double> change, DateIndex series_first, DateIndex t,
                          int lag_from, int lag_to) {
  return lag_window_average(change, t - series_first, lag_from, lag_to);
}

PanelDataset::PanelDataset(DateRange span, std::vector<Unit> units)
    : span_(span), units_(std::move(units)) {
  std::sort(units_.begin(), units_.end(),
            [](const Unit& a, const Unit& b) { return a.id < b.id; });
}

std::optional<std::size_t> PanelDataset::find(const UnitId& id) const {
  auto it = std::lower_bound(units_.begin(), units_.end(), id,
                             [](const Unit& u, const UnitId& key) { return u.id < key; });
  if (it == units_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - units_.begin());
}

std::int64_t PanelDataset::incident(std::size_t unit, std::ptrdiff_t idx) const {
  const auto& c = units_.at(unit).cumulative;
  return c.at(static_cast<std::size_t>(idx)) - c.at(static_cast<std::size_t>(idx - 1));
}

PanelDataset build_panel(const std::map<UnitId, CaseSeries>& cases,
                         const std::map<UnitId, MobilitySeries>& mobility,
                         const std::map<UnitId, DemographicRecord>& demographics,
                         BuildReport* report) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;

  std::vector<UnitId> keep;
  std::size_t dropped = 0;
  auto consider = [&](const UnitId& id) {
    const bool all = cases.contains(id) && mobility.contains(id) && demographics.contains(id);
    if (all) {
      keep.push_back(id);
    } else {
      ++dropped;
      rep.messages.push_back(fmt::format("unit {} missing from at least one input", id.value));
    }
  };
  // Union of keys, visited once each in sorted order.
  std::map<UnitId, bool> seen;
  for (const auto& [id, _] : cases) seen[id] = true;
  for (const auto& [id, _] : mobility) seen[id] = true;
  for (const auto& [id, _] : demographics) seen[id] = true;
  for (const auto& [id, _] : seen) consider(id);

  rep.units_dropped += dropped;
  if (dropped > 0) log().warn("build_panel: dropped {} unit(s) not present in all inputs", dropped);
  if (keep.empty()) throw Error(ErrorCode::EmptyPanel, "no unit is present in all three inputs");

  DateRange span = cases.at(keep.front()).span();
  for (const auto& id : keep) {
    const auto cs = cases.at(id).span();
    const auto ms = mobility.at(id).span();
    span.first = std::max({span.first, cs.first, ms.first});
    span.last = std::min({span.last, cs.last, ms.last});
  }
  if (span.last < span.first) {
    throw Error(ErrorCode::EmptyPanel, "inputs share no common date span");
  }

  std::vector<PanelDataset::Unit> units;
  units.reserve(keep.size());
  for (const auto& id : keep) {
    const auto& cs = cases.at(id);
    const auto& ms = mobility.at(id);
    if (ms.change.size() != ms.trips.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("unit {}: mobility not normalized", id.value));
    }
    derive_incident(cs);  // validates monotonicity

    PanelDataset::Unit u;
    u.id = id;
    u.demographics = demographics.at(id);
    const auto c0 = static_cast<std::size_t>(span.first - cs.first);
    const auto m0 = static_cast<std::size_t>(span.first - ms.first);
    const auto n = static_cast<std::size_t>(span.length());
    u.cumulative.assign(cs.cumulative.begin() + c0, cs.cumulative.begin() + c0 + n);
    u.trips.assign(ms.trips.begin() + m0, ms.trips.begin() + m0 + n);
    u.change.assign(ms.change.begin() + m0, ms.change.begin() + m0 + n);
    for (std::size_t t = 0; t < n; ++t) {
      if (!std::isfinite(u.trips[t]) || !std::isfinite(u.change[t])) {
        throw Error(ErrorCode::GapInSeries,
                    fmt::format("unit {} has no mobility on {}", id.value,
                                format_date(span.first + static_cast<int>(t))));
      }
    }
    units.push_back(std::move(u));
  }
  return PanelDataset(span, std::move(units));
}

}  // namespace mobfair
