#pragma once

#include <iostream>

namespace t2iopt {

/// Exit codes: 0 success (including batches with per-prompt failures),
/// 1 a single run or check failed, 2 usage or configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace t2iopt
