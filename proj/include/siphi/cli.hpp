#pragma once

#include <string>
#include <vector>

namespace siphi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `siphi` binary. args[0] is the program name.
// Subcommands: synth, split, train, sweep-layers, sweep-dims, eval, ensemble, report.
int run(const std::vector<std::string>& args);

}  // namespace siphi::cli
