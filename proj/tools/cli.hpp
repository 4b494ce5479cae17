#pragma once

#include <iosfwd>

namespace acrank {

// Entry point of the `acrank` tool. Output and diagnostics go to the given
// streams so the whole CLI can be driven in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace acrank
