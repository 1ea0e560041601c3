#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace idse::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kFormat = 3,
  kNumeric = 4,
};

/// Runs the command-line arguments `args` (program name excluded). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idse::cli
