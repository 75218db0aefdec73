#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tacseg::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Runs one command line (args[0] is the subcommand). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tacseg::cli
