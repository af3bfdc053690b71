#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hgrl::harness {

/// The `hgrl` command line. `args` excludes the program name. Returns the
/// process exit code; diagnostics go to `err` as a single line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hgrl::harness
