#pragma once

#include <iosfwd>

namespace vusc::cli {

inline constexpr const char* kToolName = "vusc";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,        // config, input or numerical error; nothing written
  kUsage = 2,          // bad command line
  kNotConverged = 3,   // outputs written but at least one fit did not converge
};

/// Runs the command line in-process. Diagnostics go to `err`, progress to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vusc::cli
