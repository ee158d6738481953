#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lordpx::cli {

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 success, 1 usage error, 2 data error, 3 model non-convergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lordpx::cli
