#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace partisan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitPartial = 3;

// Runs one command line (args[0] is the program name). The machine-readable
// summary goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace partisan::cli
