#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spocta {

/// Entry point behind the `spocta` binary. `args` excludes the program name.
/// Returns the process exit code: 0 success, 1 failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spocta
