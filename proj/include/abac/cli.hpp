#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace abac {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitExternal = 3 };

/// Runs one command line (args[0] is the program name). Normal output goes
/// to `out`, diagnostics and timings to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace abac
