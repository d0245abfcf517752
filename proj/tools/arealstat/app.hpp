#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arealstat::cli {

enum ExitCode : int { kSuccess = 0, kModuleError = 1, kConfigError = 2, kPartial = 3 };

/// Parses `args` (without the program name) and runs one subcommand. Logs
/// and the JSON error summary go to `err`; help text goes to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arealstat::cli
