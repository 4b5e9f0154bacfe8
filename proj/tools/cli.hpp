#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace intent::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

// Runs one subcommand. `args` excludes the program name. Normal output goes
// to `out`, diagnostics to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace intent::cli
