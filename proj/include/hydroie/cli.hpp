#pragma once

#include <iosfwd>

namespace hydroie {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitConfig = 2;

// Subcommands: chunk, bronze, run-matrix, evaluate, dump-prompt.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hydroie
