#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dblp {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitFailure = 2 };

/// Runs one command. `args` includes the program name. Machine-readable
/// results go to `out`, logs and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dblp
