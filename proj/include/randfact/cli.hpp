#pragma once

#include <string>
#include <vector>

namespace randfact {

/// Entry point of the randfact tool, callable in-process by tests. args holds
/// the arguments without the program name, e.g. {"factorize", "--in", "a.mtx"}.
/// Exit codes: 0 success, 2 malformed input file, 3 bad arguments or
/// parameters, 4 numerical failure. --help prints usage and returns 0.
int run_cli(const std::vector<std::string>& args);

} // namespace randfact
