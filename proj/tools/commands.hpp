#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace curator::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Full command line, argv[0] included. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Subcommands on an already-resolved config. They throw curator errors.
void cmd_rate(const RunConfig& config, std::ostream& out);
void cmd_filter(const RunConfig& config, std::ostream& out);
void cmd_stats(const RunConfig& config, std::ostream& out);
void cmd_sample(const RunConfig& config, std::ostream& out);
void cmd_arena(const RunConfig& config, std::ostream& out);
void cmd_cost(const RunConfig& config, std::ostream& out);

}  // namespace curator::cli
