#pragma once

#include <spdlog/spdlog.h>

namespace mobfair {

/// Process-wide logger. Writes to standard error so standard output stays
/// reserved for run summaries.
spdlog::logger& log();

}  // namespace mobfair
