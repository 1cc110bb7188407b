#pragma once

namespace stableweb::cli {

// Full command-line surface; linked into the library so tests can invoke
// subcommands in-process. Exit codes: 0 success, 2 validation error,
// 3 resource error, 4 failed statistical assertion (with --assert).
int cli_main(int argc, const char* const* argv);

}  // namespace stableweb::cli
