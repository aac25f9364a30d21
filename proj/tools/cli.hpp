#pragma once

#include <string>
#include <vector>

namespace eden::cli {

// Runs one command line (args[0] is the program name). Returns the exit code;
// failures print a single "error[category]: message" line to stderr.
int run(const std::vector<std::string>& args);

}  // namespace eden::cli
