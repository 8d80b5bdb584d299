#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ditsched {

/// Entry point of the `ditsched` executable. `args` excludes the program
/// name. Machine-readable output goes to `out`, diagnostics to `err`.
/// Returns 0 on success, otherwise the ErrorKind code (2 for usage errors).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ditsched
