#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgepipe::cli {

/// Runs the command line (arguments after the program name). Returns the
/// process exit code: 0 ok, 1 usage, 2 config, 3 data, 4 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgepipe::cli
