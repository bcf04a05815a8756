#pragma once

#include <iosfwd>

namespace calitr {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

// Parses argv, runs one subcommand and maps errors to exit codes. Logs and
// the error JSON go to `err`; help text and unredirected tables go to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace calitr
