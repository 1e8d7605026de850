#pragma once

#include <ostream>

namespace rcm4::tools {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,        // verify: a suite failed; report: checksum mismatch
  kExitInvalidConfig = 2,  // one line on stderr: error=invalid-config ...
  kExitRuntime = 3,
  kExitUsage = 64,
};

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rcm4::tools
