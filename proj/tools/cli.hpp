#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lclfqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line. `args` excludes the program name. Returns 0 on success,
/// 1 on operational failure and 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lclfqa::cli
