#include "mobfair/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "csv.hpp"
#include "mobfair/error.hpp"
#include "mobfair/log.hpp"

namespace mobfair::ingest {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return fmt::format("{}:{}", path.filename().string(), line);
}

// Column positions keyed by header name; MissingColumn when absent.
class Columns {
 public:
  explicit Columns(const std::vector<std::string>& header) : header_(header) {}

  std::size_t at(std::string_view name, const std::filesystem::path& path) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
      throw Error(ErrorCode::MissingColumn,
                  fmt::format("{} has no '{}' column", path.filename().string(), name));
    }
    return static_cast<std::size_t>(it - header_.begin());
  }

 private:
  const std::vector<std::string>& header_;
};

double as_fraction(double v) { return v > 1.0 ? v / 100.0 : v; }

}  // namespace

Parsed<CaseSeries> parse_cases(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const auto& header = reader.header();
  if (header.size() < 2 || header.front() != "unit_id") {
    throw Error(ErrorCode::MalformedHeader,
                fmt::format("{}: expected 'unit_id,<date>,...'", where(path, 1)));
  }
  std::vector<DateIndex> dates;
  for (std::size_t c = 1; c < header.size(); ++c) {
    DateIndex d;
    if (!try_parse_date(header[c], d)) {
      throw Error(ErrorCode::MalformedHeader,
                  fmt::format("{}: column '{}' is not an ISO date", where(path, 1), header[c]));
    }
    if (!dates.empty() && d != dates.back() + 1) {
      throw Error(ErrorCode::MalformedHeader,
                  fmt::format("{}: date columns must be consecutive days ({} follows {})",
                              where(path, 1), header[c], format_date(dates.back())));
    }
    dates.push_back(d);
  }

  Parsed<CaseSeries> out;
  std::vector<std::string> row;
  while (reader.next(row)) {
    ++out.report.rows_read;
    if (row.size() != header.size()) {
      out.report.reject(fmt::format("{}: expected {} fields, got {}", where(path, reader.line()),
                                    header.size(), row.size()));
      continue;
    }
    UnitId id{row.front()};
    if (id.value.empty()) {
      out.report.reject(fmt::format("{}: empty unit_id", where(path, reader.line())));
      continue;
    }
    if (out.series.contains(id)) {
      out.report.reject(
          fmt::format("{}: duplicate unit_id {}, row ignored", where(path, reader.line()), id.value));
      continue;
    }
    CaseSeries series{id, dates.front(), {}};
    series.cumulative.reserve(dates.size());
    for (std::size_t c = 1; c < row.size(); ++c) {
      const auto v = csv::to_int(row[c]);
      if (!v || *v < 0) {
        throw Error(ErrorCode::NonIntegerCount,
                    fmt::format("{}: unit {} on {}: '{}' is not a non-negative integer",
                                where(path, reader.line()), id.value, header[c], row[c]));
      }
      series.cumulative.push_back(*v);
    }
    derive_incident(series);
    out.series.emplace(std::move(id), std::move(series));
  }
  return out;
}

MobilitySchema parse_schema(std::string_view name) {
  if (name == "od") return MobilitySchema::Od;
  if (name == "aggregated") return MobilitySchema::Aggregated;
  throw Error(ErrorCode::UnknownSchema, fmt::format("unknown mobility schema '{}'", name));
}

Parsed<MobilitySeries> parse_mobility(const std::filesystem::path& path,
                                      const MobilityOptions& opts) {
  csv::Reader reader(path);
  const auto& header = reader.header();
  const std::vector<std::string> od_header{"origin", "destination", "date", "trips"};
  const std::vector<std::string> agg_header{"unit_id", "date", "trips"};
  const bool od = opts.schema == MobilitySchema::Od;
  if (header != (od ? od_header : agg_header)) {
    throw Error(ErrorCode::UnknownSchema,
                fmt::format("{}: header does not match the '{}' schema", where(path, 1),
                            od ? "od" : "aggregated"));
  }

  Parsed<MobilitySeries> out;
  std::map<UnitId, std::map<DateIndex, double>> volume;
  std::set<std::tuple<std::string, std::string, DateIndex>> seen_rows;
  std::vector<std::string> row;
  while (reader.next(row)) {
    ++out.report.rows_read;
    if (row.size() != header.size()) {
      out.report.reject(fmt::format("{}: expected {} fields, got {}", where(path, reader.line()),
                                    header.size(), row.size()));
      continue;
    }
    const std::string& unit = row[0];
    const std::string& dest = od ? row[1] : row[0];
    const std::string& date_text = od ? row[2] : row[1];
    const std::string& trips_text = od ? row[3] : row[2];
    DateIndex date;
    if (unit.empty() || !try_parse_date(date_text, date)) {
      out.report.reject(fmt::format("{}: bad unit or date", where(path, reader.line())));
      continue;
    }
    const auto trips = csv::to_double(trips_text);
    if (!trips) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}: trips '{}' is not a number", where(path, reader.line()),
                              trips_text));
    }
    if (*trips < 0.0) {
      throw Error(ErrorCode::NegativeTrips,
                  fmt::format("{}: unit {} on {} has {} trips", where(path, reader.line()), unit,
                              date_text, *trips));
    }
    if (!seen_rows.emplace(unit, dest, date).second) {
      out.report.reject(fmt::format("{}: duplicate row for {} on {}", where(path, reader.line()),
                                    unit, date_text));
      continue;
    }
    auto& day = volume[UnitId{unit}][date];
    if (od && !opts.include_self_loops && unit == dest) continue;
    day += *trips;
  }

  for (auto& [id, days] : volume) {
    const DateIndex first = days.begin()->first;
    const DateIndex last = days.rbegin()->first;
    MobilitySeries s{id, first, std::vector<double>(static_cast<std::size_t>(last - first + 1),
                                                    std::numeric_limits<double>::quiet_NaN()),
                     {}};
    for (const auto& [d, v] : days) s.trips[static_cast<std::size_t>(d - first)] = v;
    out.series.emplace(id, std::move(s));
  }
  return out;
}

Parsed<DemographicRecord> parse_demographics(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const auto& header = reader.header();
  const Columns cols(header);
  const std::size_t c_unit = cols.at("unit_id", path);
  const std::size_t c_income = cols.at("income", path);
  const std::size_t c_phone = cols.at("smartphone_pct", path);
  const std::size_t c_pop = cols.at("population", path);
  const std::size_t c_edu = cols.at("education_pct", path);
  const std::size_t c_nchs = cols.at("nchs", path);
  const std::size_t c_age = cols.at("median_age", path);
  const std::set<std::size_t> standard{c_unit, c_income, c_phone, c_pop, c_edu, c_nchs, c_age};

  Parsed<DemographicRecord> out;
  std::vector<std::string> row;
  while (reader.next(row)) {
    ++out.report.rows_read;
    const auto line = where(path, reader.line());
    if (row.size() != header.size()) {
      out.report.reject(
          fmt::format("{}: expected {} fields, got {}", line, header.size(), row.size()));
      continue;
    }
    UnitId id{row[c_unit]};
    if (id.value.empty()) {
      out.report.reject(fmt::format("{}: empty unit_id", line));
      continue;
    }
    if (out.series.contains(id)) {
      out.report.reject(fmt::format("{}: duplicate unit_id {}, row ignored", line, id.value));
      continue;
    }
    auto number = [&](std::size_t c) {
      const auto v = csv::to_double(row[c]);
      if (!v) {
        throw Error(ErrorCode::OutOfRange, fmt::format("{}: unit {}: {} '{}' is not a number",
                                                       line, id.value, header[c], row[c]));
      }
      return *v;
    };
    DemographicRecord rec;
    rec.unit = id;
    rec.income = number(c_income);
    rec.smartphone_pct = as_fraction(number(c_phone));
    rec.population = number(c_pop);
    rec.education_pct = as_fraction(number(c_edu));
    rec.median_age = number(c_age);
    const double nchs = number(c_nchs);
    if (nchs != std::floor(nchs) || nchs < 1 || nchs > 6) {
      throw Error(ErrorCode::OutOfRange,
                  fmt::format("{}: unit {}: nchs {} outside 1..6", line, id.value, row[c_nchs]));
    }
    rec.nchs = static_cast<int>(nchs);
    if (!(rec.population > 0)) {
      throw Error(ErrorCode::OutOfRange,
                  fmt::format("{}: unit {}: population must be positive", line, id.value));
    }
    for (auto [name, v] : {std::pair{"smartphone_pct", rec.smartphone_pct},
                           std::pair{"education_pct", rec.education_pct}}) {
      if (v < 0.0 || v > 1.0) {
        throw Error(ErrorCode::OutOfRange,
                    fmt::format("{}: unit {}: {} outside 0..100%", line, id.value, name));
      }
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (standard.contains(c)) continue;
      rec.extra[header[c]] =
          csv::to_double(row[c]).value_or(std::numeric_limits<double>::quiet_NaN());
    }
    out.series.emplace(std::move(id), std::move(rec));
  }
  return out;
}

void write_cases(const std::filesystem::path& path, const std::map<UnitId, CaseSeries>& cases) {
  auto out = csv::open_for_write(path);
  if (cases.empty()) {
    out << "unit_id\n";
    csv::finish(out, path);
    return;
  }
  const auto& first = cases.begin()->second;
  out << "unit_id";
  for (std::size_t t = 0; t < first.cumulative.size(); ++t) {
    out << ',' << format_date(first.first + static_cast<int>(t));
  }
  out << '\n';
  for (const auto& [id, s] : cases) {
    if (s.first != first.first || s.cumulative.size() != first.cumulative.size()) {
      throw Error(ErrorCode::InvalidArgument, "case series must share one date span");
    }
    out << id.value;
    for (auto v : s.cumulative) out << ',' << v;
    out << '\n';
  }
  csv::finish(out, path);
}

void write_mobility_aggregated(const std::filesystem::path& path,
                               const std::map<UnitId, MobilitySeries>& mobility) {
  auto out = csv::open_for_write(path);
  out << "unit_id,date,trips\n";
  for (const auto& [id, s] : mobility) {
    for (std::size_t t = 0; t < s.trips.size(); ++t) {
      if (std::isnan(s.trips[t])) continue;
      out << fmt::format("{},{},{}\n", id.value, format_date(s.first + static_cast<int>(t)),
                         s.trips[t]);
    }
  }
  csv::finish(out, path);
}

void write_demographics(const std::filesystem::path& path,
                        const std::map<UnitId, DemographicRecord>& demographics) {
  auto out = csv::open_for_write(path);
  std::set<std::string> extras;
  for (const auto& [_, r] : demographics) {
    for (const auto& [k, _v] : r.extra) extras.insert(k);
  }
  out << "unit_id,income,smartphone_pct,population,education_pct,nchs,median_age";
  for (const auto& k : extras) out << ',' << k;
  out << '\n';
  for (const auto& [id, r] : demographics) {
    out << fmt::format("{},{},{},{},{},{},{}", id.value, r.income, r.smartphone_pct, r.population,
                       r.education_pct, r.nchs, r.median_age);
    for (const auto& k : extras) {
      auto it = r.extra.find(k);
      if (it != r.extra.end() && std::isfinite(it->second)) {
        out << ',' << fmt::format("{}", it->second);
      } else {
        out << ',';
      }
    }
    out << '\n';
  }
  csv::finish(out, path);
}

}  // namespace mobfair::ingest
