#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace sacoding {

/// Exit codes are part of the interface.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs the `sacode` command line. `args` excludes the program name.
int run_cli(std::span<const std::string> args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace sacoding
