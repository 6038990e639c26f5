#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clarity {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitScorer = 3,
};

/// Entry point behind the `clarity` binary: index, predict, evaluate, sweep, export-graph.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clarity
