#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtgee::cli {

// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalFailure = 3,
};

// Runs one command line (argv[0] is the program name). Reports go to `out`
// unless --out names a file; messages go to `err`.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace mtgee::cli
