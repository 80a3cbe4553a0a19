#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "mobfair/config.hpp"
#include "mobfair/error.hpp"

namespace mobfair {

/// Process exit statuses of the command-line tool.
enum ExitStatus : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitData = 4,
  kExitNoFits = 5,
};

int exit_status_for(ErrorCode code);

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> output_dir;
};

/// Loads the config and applies command-line overrides.
RunConfig resolve_config(const CommandOptions& opts);

/// Panel from [data] (ingested and normalized) or generated from [synth].
PanelDataset load_panel(const RunConfig& cfg);
std::map<UnitId, DemographicRecord> load_demographics(const RunConfig& cfg);

/// Earliest origin with full training history for every selected model
/// through the last origin with max-horizon actuals.
backtest::Schedule default_schedule(const PanelDataset& panel, const backtest::ModelSpec& spec);

// Each command writes its summary to `out`, diagnostics to the log (stderr),
// and returns an exit status.
int cmd_synth(const CommandOptions& opts, std::ostream& out);
int cmd_backtest(const CommandOptions& opts, std::ostream& out);
int cmd_audit(const CommandOptions& opts, std::ostream& out);

}  // namespace mobfair
