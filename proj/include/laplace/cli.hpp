#pragma once

#include <iosfwd>

namespace laplace {

/// Exit statuses of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitIo = 3,
};

/// Runs the laplace-mle command line. Diagnostics go to err as a single
/// line starting with "error:".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace laplace
