#pragma once

namespace taac::cli {

// Parse argv and run one subcommand. Exit status: 0 on success, 1 on a
// runtime failure inside a command, 2 on a usage error (unknown
// subcommand/flag, missing required option).
int run(int argc, const char* const* argv);

}  // namespace taac::cli
