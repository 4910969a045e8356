#pragma once

#include <ostream>

namespace mmpa::io {

// Exit codes: 0 success, 1 analysis or I/O failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysis = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmpa::io
