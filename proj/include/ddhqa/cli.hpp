#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddhqa::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2 };

/// Entry point of the `ddhqa` tool. `args[0]` is the program name.
///
/// Subcommands: extract-geometry, train, evaluate, predict. Every subcommand
/// accepts `--config FILE` (flat JSON object, see README) whose values are
/// overridden by explicit flags.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddhqa::cli
