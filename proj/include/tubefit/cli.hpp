#pragma once

#include <iosfwd>

#include "tubefit/error.hpp"

namespace tubefit {

/// Process exit codes of the command-line tool.
enum class ExitCode : int {
    Ok = 0,
    Internal = 1,
    Usage = 2,
    InvalidConfig = 3,
    Io = 4,
    Parse = 5,
    Numerical = 6,
    TubeFitFailed = 7,
    Export = 8,
};

ExitCode exit_code_for(ErrorCode code) noexcept;

/// Runs the tubefit command line. Diagnostics go to `err`, help to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tubefit
