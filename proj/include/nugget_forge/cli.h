#pragma once
// nugget-forge command line: gen-bench, extract, build, optimize, replay,
// eval, negctl, report.

#include <ostream>
#include <string>
#include <vector>

namespace nf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitIntegrity = 3;

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nf
