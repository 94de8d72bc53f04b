#ifndef THREEC_CLI_HPP
#define THREEC_CLI_HPP

#include <iostream>

namespace threec {

/// Subcommands gen, seed, run, eval, cost and codebook. Returns 0 on
/// success, 1 on a usage error and 2 on a runtime error.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                 std::ostream& err = std::cerr);

}  // namespace threec

#endif
