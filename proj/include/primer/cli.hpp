#pragma once

#include "primer/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace primer::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1, // also usage errors
    kExitDecode = 2,
    kExitTransport = 3,
    kExitEmptySelection = 4,
    kExitThreshold = 5,
};

int exit_code_for(ErrorCode code);

// Runs one subcommand. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace primer::cli
