#pragma once

#include <iosfwd>

namespace corridorflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitGradCheck = 5;

/// Entry point of the `corridorflow` tool. Human-readable output goes to
/// `out`, diagnostics to `err`; the return value is the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace corridorflow::cli
