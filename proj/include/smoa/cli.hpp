#pragma once

#include <exception>
#include <iosfwd>

namespace smoa::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kIo = 3,
  kNumerical = 4,
};

/// Maps a library exception to the exit code reported for it.
int exit_code_for(const std::exception& e);

/// Runs the `smoa` command line. Success output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smoa::cli
