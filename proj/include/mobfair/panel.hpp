#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobfair/date.hpp"

namespace mobfair {

/// Opaque geographic unit key (a county FIPS code for real data).
struct UnitId {
  std::string value;

  friend auto operator<=>(const UnitId&, const UnitId&) = default;
};

struct CaseSeries {
  UnitId unit;
  DateIndex first;
  std::vector<std::int64_t> cumulative;

  [[nodiscard]] DateRange span() const {
    return {first, first + static_cast<int>(cumulative.size()) - 1};
  }
};

/// Raw daily trip volume and the change ratio against the baseline mean.
/// Missing days carry NaN; `change` is empty until normalized.
struct MobilitySeries {
  UnitId unit;
  DateIndex first;
  std::vector<double> trips;
  std::vector<double> change;

  [[nodiscard]] DateRange span() const {
    return {first, first + static_cast<int>(trips.size()) - 1};
  }
};

struct DemographicRecord {
  UnitId unit;
  double income = 0.0;
  double smartphone_pct = 0.0;  // fraction in [0, 1]
  double population = 0.0;
  double education_pct = 0.0;   // fraction in [0, 1]
  int nchs = 1;                 // 1 most urban .. 6 most rural
  double median_age = 0.0;
  /// Additional numeric columns, carried through to the audit as covariates.
  std::map<std::string, double> extra;
};

/// Names of the six standard covariates, in reporting order.
const std::vector<std::string>& standard_covariates();
/// Looks up a covariate by name, including extra columns.
std::optional<double> covariate_value(const DemographicRecord& rec, const std::string& name);

/// First differences of a cumulative series. Element 0 is masked.
/// Throws DecreasingCumulative naming the unit and date.
std::vector<std::optional<std::int64_t>> derive_incident(const CaseSeries& cases);

/// change(t) = trips(t) / mean(trips over baseline).
std::vector<double> normalize_mobility(std::span<const double> trips, DateIndex series_first,
                                       const DateRange& baseline);

/// Returns a copy of `raw` with `change` filled in.
MobilitySeries normalized(MobilitySeries raw, const DateRange& baseline);

/// Mean of change over days [t - lag_to, t - lag_from]. `t` is an index into
/// `change`; throws InsufficientHistory when the window leaves the series.
double lag_window_average(std::span<const double> change, std::ptrdiff_t t, int lag_from,
                          int lag_to);
double lag_window_average(std::span<const double> change, DateIndex series_first, DateIndex t,
                          int lag_from, int lag_to);

/// Unit x day panel aligned on one common date span. Immutable once built.
class PanelDataset {
 public:
  struct Unit {
    UnitId id;
    std::vector<std::int64_t> cumulative;
    std::vector<double> trips;
    std::vector<double> change;
    DemographicRecord demographics;
  };

  PanelDataset() = default;
  PanelDataset(DateRange span, std::vector<Unit> units);

  [[nodiscard]] const DateRange& date_span() const { return span_; }
  [[nodiscard]] std::size_t size() const { return units_.size(); }
  [[nodiscard]] int n_days() const { return span_.length(); }
  [[nodiscard]] const Unit& unit(std::size_t i) const { return units_.at(i); }
  [[nodiscard]] const std::vector<Unit>& units() const { return units_; }
  [[nodiscard]] std::optional<std::size_t> find(const UnitId& id) const;

  /// Day offset of `d` within the span (may be out of range).
  [[nodiscard]] std::ptrdiff_t index_of(DateIndex d) const { return d - span_.first; }
  [[nodiscard]] DateIndex date_at(std::ptrdiff_t idx) const {
    return span_.first + static_cast<int>(idx);
  }

  /// Incident cases on day index `idx` (idx >= 1).
  [[nodiscard]] std::int64_t incident(std::size_t unit, std::ptrdiff_t idx) const;

 private:
  DateRange span_{};
  std::vector<Unit> units_;
};

struct BuildReport {
  std::size_t units_dropped = 0;
  std::vector<std::string> messages;
};

/// Intersects units across the three inputs and clips every series to the
/// common date span. Mobility must already be normalized.
PanelDataset build_panel(const std::map<UnitId, CaseSeries>& cases,
                         const std::map<UnitId, MobilitySeries>& mobility,
                         const std::map<UnitId, DemographicRecord>& demographics,
                         BuildReport* report = nullptr);

}  // namespace mobfair
