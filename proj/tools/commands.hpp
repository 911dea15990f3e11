#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace taste::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `taste` command line (args excludes the program name). Returns the
/// process exit code: 0 on success, 1 on invalid data, 2 on I/O or usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taste::cli
