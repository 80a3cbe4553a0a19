#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mobfair/backtest.hpp"
#include "mobfair/fairness.hpp"
#include "mobfair/ingest.hpp"
#include "mobfair/synth.hpp"

namespace mobfair {

struct DataSection {
  std::filesystem::path cases;
  std::filesystem::path mobility;
  std::filesystem::path demographics;
  ingest::MobilityOptions mobility_options;
  DateRange baseline;
};

/// Parsed run configuration. Exactly one of `data` / `synth` is set.
struct RunConfig {
  std::optional<DataSection> data;
  std::optional<synth::SynthConfig> synth;

  backtest::ModelSpec spec;
  std::optional<DateIndex> schedule_start;
  std::optional<DateIndex> schedule_end;
  int schedule_step = 1;
  int mape_min_obs = 3;
  std::filesystem::path output_dir = "out";
  int workers = 1;
  std::uint64_t seed = 0;

  fairness::AuditConfig audit;
  /// Empty means the six standard covariates plus any extra columns.
  std::vector<std::string> covariates;
  std::optional<std::filesystem::path> mape_path;

  /// FNV-1a of the config text, hex.
  std::string hash;
};

/// INI-style text: `[section]` headers, `key = value` lines, `;` or `#`
/// comments. Unknown sections or keys are errors. Relative paths resolve
/// against `base_dir`. Throws Error{ConfigError}.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
/// Throws Error{IoFailure} when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace mobfair
