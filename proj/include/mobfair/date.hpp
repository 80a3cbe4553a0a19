#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace mobfair {

/// Calendar day as a count of days since 1970-01-01.
struct DateIndex {
  std::int32_t epoch_day = 0;

  friend auto operator<=>(const DateIndex&, const DateIndex&) = default;

  DateIndex operator+(int days) const { return {epoch_day + days}; }
  DateIndex operator-(int days) const { return {epoch_day - days}; }
  int operator-(DateIndex other) const { return epoch_day - other.epoch_day; }
};

/// Parses YYYY-MM-DD. Throws Error{InvalidArgument} on anything else.
DateIndex parse_date(std::string_view text);
/// Non-throwing variant used while sniffing CSV headers.
bool try_parse_date(std::string_view text, DateIndex& out);
std::string format_date(DateIndex date);

int year_of(DateIndex date);
unsigned month_of(DateIndex date);

/// ISO-8601 week label, e.g. "2020-W15".
std::string iso_week_label(DateIndex date);
/// Monday that starts the ISO week containing `date`.
DateIndex iso_week_start(DateIndex date);
/// Calendar month label, e.g. "2020-04".
std::string month_label(DateIndex date);

/// Inclusive range of days.
struct DateRange {
  DateIndex first;
  DateIndex last;

  [[nodiscard]] int length() const { return last - first + 1; }
  [[nodiscard]] bool contains(DateIndex d) const { return first <= d && d <= last; }
  [[nodiscard]] bool contains(const DateRange& r) const {
    return contains(r.first) && contains(r.last);
  }
};

/// Range covering a whole calendar month.
DateRange month_range(int year, unsigned month);

}  // namespace mobfair
