#pragma once

#include <iostream>
#include <ostream>

namespace ultrasr {

// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Command-line entry point. Reports and progress go to out, usage and
// error messages to err.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace ultrasr
