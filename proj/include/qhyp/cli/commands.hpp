#pragma once

#include "qhyp/cli/config.hpp"
#include "qhyp/cli/io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qhyp::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

struct CommandOptions {
  std::optional<std::uint64_t> seed;    // overrides run.master_seed
  unsigned workers = 0;                 // 0: available parallelism
  std::optional<std::string> out_dir;   // overrides output.dir
  bool svg = true;
};

/// Files written by a command, in write order.
using WrittenFiles = std::vector<std::string>;

WrittenFiles cmd_error_curve(const Config& config, const CommandOptions& options);
WrittenFiles cmd_trajectory(const Config& config, const CommandOptions& options);
WrittenFiles cmd_bound(const Config& config, const CommandOptions& options);

/// Single-record reconstruction behind cmd_trajectory: the signal, posteriors
/// and optimal-observable Bloch direction at every integration step.
struct TrajectoryRun {
  TrajectoryRecord record;
  std::vector<TrajectoryRow> rows;
};
TrajectoryRun run_trajectory(const ExperimentSpec& spec, std::size_t true_hypothesis);

/// Entry point of the qhyp executable. Returns the process exit code:
/// 0 success, 1 configuration or usage error, 2 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qhyp::cli
