#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace veritrace {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitBadInput = 1,
  kExitMissingArtifact = 2,
  kExitInternal = 3,
};

/// Runs `veritrace <command> ...` in-process. `args` excludes the program
/// name. Normal output goes to `out`, log lines and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace veritrace
