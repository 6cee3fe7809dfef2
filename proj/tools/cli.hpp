#pragma once

#include <iosfwd>

namespace attnorm::cli {

/// Parses and runs one invocation of the `attnorm` tool. Results go to `out`,
/// diagnostics to `err`; returns the process exit code (0 iff the work completed).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace attnorm::cli
