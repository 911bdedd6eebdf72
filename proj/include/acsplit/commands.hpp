#pragma once

// Subcommands of the command-line front end. Exit codes: 0 success,
// 1 experiment failure, 2 configuration error.

#include "acsplit/config.hpp"
#include "acsplit/report_io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace acsplit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitExperimentFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Command-line values that override the config file.
struct CommandOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  bool bit_repro = false;

  void apply(ExperimentConfig& config) const;
};

/// Probe estimates at dt, dt/2, ..., dt/2^halvings on shared noise paths.
std::vector<ProbePoint> run_probe_series(const ExperimentConfig& config);

/// Writes <out>/<name>.json, <name>.csv and <name>_long.csv.
int cmd_rates(const std::string& config_path, const CommandOverrides& overrides, std::ostream& log);
/// Writes <out>/<name>.json.
int cmd_probe(const std::string& config_path, const CommandOverrides& overrides, std::ostream& log);
/// Writes <out>/<name>_trajectory.csv and <name>_run.json.
int cmd_run(const std::string& config_path, const CommandOverrides& overrides, std::ostream& log);
int cmd_selftest(std::ostream& log, const std::string& corrupt = {});

}  // namespace acsplit
