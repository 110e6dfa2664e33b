#pragma once

#include <iosfwd>

namespace qmem::cli {

enum exit_code : int {
    ok = 0,
    validation = 1,     ///< bad arguments, bad config keys or values
    numerical = 2,      ///< stiffness, divergence, singular parameters
    io = 3,             ///< unreadable or unwritable files, schema mismatch
};

/// Runs one subcommand. Reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace qmem::cli
