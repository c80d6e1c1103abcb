#pragma once

#include <iosfwd>

namespace rql {

enum ExitStatus : int {
    ExitOk = 0,
    ExitInputError = 1,
    ExitViolation = 2,
    ExitUnsupported = 3,
    ExitNonterminating = 4,
};

/// Entry point of the `rql` tool. Output goes to `out`, messages to `err`.
/// The default profile comes from RQL_PROFILE when --profile is absent.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rql
