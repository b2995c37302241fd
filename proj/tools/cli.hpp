#pragma once

#include <iosfwd>

namespace sparsequad::cli {

/// Entry point of the `sparsequad` tool. Exit codes: 0 success, 1 validation
/// or usage error, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sparsequad::cli
