#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mce::cli {

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 success, 1 computation failure, 2 validation or usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace mce::cli
