#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dialogic {

// Runs the command line `args` (without the program name). Returns the
// process exit code; failures print an error JSON object to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace dialogic
