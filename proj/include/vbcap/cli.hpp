#pragma once

namespace vbcap {

// Entry point for the command-line tool. Exit codes: 0 success (simulate:
// verdict tracked; verify: not excluded), 1 failed verdict, 2 usage or
// config errors.
int run_cli(int argc, const char* const* argv);

}  // namespace vbcap
