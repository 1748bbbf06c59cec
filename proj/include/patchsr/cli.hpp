#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace patchsr::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args[0] is the program name). Never throws;
/// failures are reported on `err` and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace patchsr::cli
