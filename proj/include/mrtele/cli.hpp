#pragma once

#include <ostream>

namespace mrtele::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `mrtele` tool. Verbs: run, fit, metrics, export,
/// replay, serve, calibrate-env.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mrtele::cli
