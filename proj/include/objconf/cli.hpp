#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace objconf::cli {

/// Runs one subcommand (fit, predict, evaluate, simulate, sweep-bandwidth,
/// single-index). args excludes the program name. Returns 0 on success, 2 on
/// usage errors and 1 on runtime failures; errors are written to err as a
/// JSON object {"error": ..., "kind": "usage" | "runtime"}.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace objconf::cli
