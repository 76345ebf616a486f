#pragma once

namespace othr::cli {

/// Parses the command line and runs one subcommand. Returns the process exit
/// code: 0 success, 1 I/O failure, 2 configuration or schema error.
int run_cli(int argc, const char* const* argv);

}  // namespace othr::cli
