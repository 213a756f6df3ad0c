#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aoi::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kThreshold = 3 };

/// Runs the tool on `args` (without the program name). CSV goes to `out`
/// unless --out names a directory; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aoi::cli
