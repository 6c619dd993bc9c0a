#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace affect {

// Entry point of the affect-forge command line; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace affect
