#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rhsim::cli {

/// Exit statuses shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kNegative = 1;  // invalid mapping, infeasible plan, NOT_MITIGATED under --expect-mitigated
inline constexpr int kUsage = 2;     // usage, parse and I/O errors

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rhsim::cli
