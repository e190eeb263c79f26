#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace agritrace::cli {

// Runs the `trace` command line. args excludes the program name. Returns the
// process exit status.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace agritrace::cli
