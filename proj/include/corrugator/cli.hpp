#pragma once

#include "corrugator/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace corrugator {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitStage = 3, kExitIo = 4 };

struct CliOptions {
  std::string config;   // JSON path, empty for none
  std::string example;  // built-in name, used when no config is given
  std::string out_dir = "out";
  std::optional<int> digits;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::optional<std::string> subwindow;  // "x0,x1,y0,y1"
  // verify / export
  std::string report;
  std::optional<int> level;  // export: corrugation level 0..3, all when unset
  std::string format;        // export: obj | csv, config value when empty
};

// Config file or example, then flag overrides, then validation.
RunConfig resolve_config(const CliOptions& opts);

// Runs one subcommand (c1, holder, sweep, verify, export) and maps errors to
// exit codes. Progress and failures go to `log`.
int run_command(const std::string& command, const CliOptions& opts, std::ostream& log);

}  // namespace corrugator
