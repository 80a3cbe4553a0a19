#include "mobfair/date.hpp"

#include <charconv>
#include <chrono>

#include <fmt/format.h>

#include "mobfair/error.hpp"

namespace mobfair {

namespace {

namespace chr = std::chrono;

chr::sys_days to_sys(DateIndex d) { return chr::sys_days{chr::days{d.epoch_day}}; }

DateIndex from_sys(chr::sys_days d) {
  return {static_cast<std::int32_t>(d.time_since_epoch().count())};
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

bool try_parse_date(std::string_view text, DateIndex& out) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (!parse_field(text.substr(0, 4), y) || !parse_field(text.substr(5, 2), m) ||
      !parse_field(text.substr(8, 2), d)) {
    return false;
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) return false;
  out = from_sys(chr::sys_days{ymd});
  return true;
}

DateIndex parse_date(std::string_view text) {
  DateIndex out;
  if (!try_parse_date(text, out)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("not an ISO date: '{}'", text));
  }
  return out;
}

std::string format_date(DateIndex date) {
  const chr::year_month_day ymd{to_sys(date)};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

int year_of(DateIndex date) { return static_cast<int>(chr::year_month_day{to_sys(date)}.year()); }

unsigned month_of(DateIndex date) {
  return static_cast<unsigned>(chr::year_month_day{to_sys(date)}.month());
}

DateIndex iso_week_start(DateIndex date) {
  const chr::weekday wd{to_sys(date)};
  return date - static_cast<int>(wd.iso_encoding() - 1);
}

std::string iso_week_label(DateIndex date) {
  // The ISO year is the calendar year of the week's Thursday.
  const DateIndex thursday = iso_week_start(date) + 3;
  const int iso_year = year_of(thursday);
  const DateIndex jan4 = from_sys(chr::sys_days{chr::year{iso_year} / 1 / 4});
  const int week = (iso_week_start(date) - iso_week_start(jan4)) / 7 + 1;
  return fmt::format("{:04d}-W{:02d}", iso_year, week);
}

std::string month_label(DateIndex date) {
  return fmt::format("{:04d}-{:02d}", year_of(date), month_of(date));
}

DateRange month_range(int year, unsigned month) {
  const chr::year_month ym{chr::year{year}, chr::month{month}};
  const auto first = chr::sys_days{ym / 1};
  const auto last = chr::sys_days{ym / chr::last};
  return {from_sys(first), from_sys(last)};
}

}  // namespace mobfair
