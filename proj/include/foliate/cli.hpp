#pragma once

#include <string>
#include <vector>

namespace foliate {

/// Exit codes: 0 success, 2 resonance / refusal / failed verification, 1 any other error.
enum ExitCode { kExitOk = 0, kExitError = 1, kExitFailed = 2 };

/// args[0] is the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace foliate
