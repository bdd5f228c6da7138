#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dbtrisk::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kIo = 3,
    kContract = 4,
    kDivergence = 5,
};

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbtrisk::cli
