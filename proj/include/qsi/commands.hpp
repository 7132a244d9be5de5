// Subcommands behind the `qsi` tool. Each writes its artifacts into
// cfg.output_dir and a short human-readable summary to `log`.
#pragma once

#include <iosfwd>
#include <string_view>

#include "qsi/config.hpp"

namespace qsi::cli {

inline constexpr std::string_view kVersion = "1.0.0";

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kRuntimeError = 3,
  kCompromised = 4,
};

int cmd_analyze(const config::RunConfig& cfg, std::ostream& log);
int cmd_simulate(const config::RunConfig& cfg, std::ostream& log);
int cmd_image(const config::RunConfig& cfg, std::ostream& log);
int cmd_attack_sweep(const config::RunConfig& cfg, std::ostream& log);

/// Runs `command` and maps exceptions to exit codes, reporting them on `err`:
/// configuration and input-file problems give kConfigError, anything else
/// kRuntimeError.
int run_guarded(int (*command)(const config::RunConfig&, std::ostream&),
                const config::RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace qsi::cli
