#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mavic::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one command line (arguments after the program name). Diagnostics and
// error records go to `err`; returns the process exit code.
int run(std::vector<std::string> args, std::ostream& err);

}  // namespace mavic::cli
