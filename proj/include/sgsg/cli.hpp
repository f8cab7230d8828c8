#pragma once

#include <string>
#include <vector>

namespace sgsg {

/// Entry point behind the sgsg binary; exposed so tests can drive the exact
/// CLI surface in-process. Returns the process exit code: 0 on success, 2 on
/// usage errors, 1 on runtime failures.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace sgsg
