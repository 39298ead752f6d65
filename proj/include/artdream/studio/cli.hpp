#pragma once

#include <iosfwd>

namespace artdream::studio {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2 };

// The `studio` command line. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Makes a running `serve` return. Safe from a signal handler.
void request_shutdown() noexcept;

}  // namespace artdream::studio
