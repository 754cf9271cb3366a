#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace partsat::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitVerification = 2,
    kExitResource = 3,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace partsat::cli
