#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace relgraph::cli {

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`; failures are reported on `err` as one JSON object. Returns the
/// process exit code: 0 on success, 1 for toolkit errors, 2 for usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relgraph::cli
