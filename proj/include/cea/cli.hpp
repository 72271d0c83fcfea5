#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cea {

// Exit codes: 0 success/pass, 1 verification failure, 2 usage/config error,
// 3 I/O error.
enum ExitCode : int { kExitOk = 0, kExitFail = 1, kExitUsage = 2, kExitIo = 3 };

// Entry point behind the `cea` binary; args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cea
