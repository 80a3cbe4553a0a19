#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mobfair/panel.hpp"

namespace mobfair::ingest {

enum class Severity { Info, Warning };

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::size_t units_dropped = 0;
  std::vector<std::pair<Severity, std::string>> messages;

  void reject(std::string msg) {
    ++rows_rejected;
    messages.emplace_back(Severity::Warning, std::move(msg));
  }
};

template <typename T>
struct Parsed {
  std::map<UnitId, T> series;
  IngestReport report;
};

/// Wide layout: `unit_id,<date1>,<date2>,...` holding cumulative counts.
Parsed<CaseSeries> parse_cases(const std::filesystem::path& path);

enum class MobilitySchema { Od, Aggregated };

/// "od" or "aggregated"; anything else throws UnknownSchema.
MobilitySchema parse_schema(std::string_view name);

struct MobilityOptions {
  MobilitySchema schema = MobilitySchema::Aggregated;
  /// Count origin == destination rows toward the origin's volume.
  bool include_self_loops = true;
};

/// Raw trip volumes per unit. `od` sums trips over destinations per
/// (origin, date); `aggregated` reads `unit_id,date,trips` directly. Days
/// absent from the file are NaN so that panel construction can report them.
Parsed<MobilitySeries> parse_mobility(const std::filesystem::path& path,
                                      const MobilityOptions& opts = {});

/// `unit_id,income,smartphone_pct,population,education_pct,nchs,median_age`
/// plus optional extra numeric columns.
Parsed<DemographicRecord> parse_demographics(const std::filesystem::path& path);

// Writers producing files the parsers above accept.
void write_cases(const std::filesystem::path& path, const std::map<UnitId, CaseSeries>& cases);
void write_mobility_aggregated(const std::filesystem::path& path,
                               const std::map<UnitId, MobilitySeries>& mobility);
void write_demographics(const std::filesystem::path& path,
                        const std::map<UnitId, DemographicRecord>& demographics);

}  // namespace mobfair::ingest
