#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace emsa::cli {

// Runs one CLI invocation. args excludes the program name. Returns the
// process exit code: 0 success, 1 usage error, 2 data error, 3 internal
// invariant violation.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace emsa::cli
