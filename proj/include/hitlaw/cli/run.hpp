#pragma once

#include <string>
#include <vector>

#include "hitlaw/cli/config.hpp"
#include "hitlaw/cli/pool.hpp"
#include "hitlaw/cli/report.hpp"

namespace hitlaw::cli {

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kConfigError = 2, kInternalError = 3 };

const std::vector<std::string>& subcommands();

struct RunOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct RunResult {
  Json report;
  bool pass = true;
  std::vector<CsvTable> tables;
};

/// Throws Error(ConfigParse) for configuration problems and other Errors from the modules.
RunResult run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace hitlaw::cli
