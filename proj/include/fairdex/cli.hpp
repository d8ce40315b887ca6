#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fairdex::cli {

/// Exit codes are part of the interface.
enum ExitCode : int { kSuccess = 0, kInternalError = 1, kInputError = 2 };

/// Runs `fairdex <args...>` (program name excluded). Reports go to files; human
/// output to `out`, errors to `err`. Log verbosity comes from the
/// FAIRDEX_LOG_LEVEL environment variable (trace, debug, info, warn, error, off).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairdex::cli
