#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Full command line without the program name, e.g. {"synth", "--per-class", "10"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdflow
