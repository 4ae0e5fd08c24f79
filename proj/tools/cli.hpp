#pragma once

#include <ostream>

namespace urbanseg::cli {

/// Exit code for command-line syntax errors, including unknown subcommands.
inline constexpr int kExitUsage = 64;

/// Parses argv, runs the selected subcommand and maps failures to exit
/// codes: 0 success, 2 I/O, 3 validation, 4 numeric/degenerate, 64 usage.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace urbanseg::cli
