#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgfit::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 on a usage error and 1 on any other failure; diagnostics go to
/// `err`, machine-readable results to `out` or to files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kgfit::cli
