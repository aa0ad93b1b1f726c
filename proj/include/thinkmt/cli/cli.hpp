#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace thinkmt::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kBackendError = 3,
  kPartialFailure = 4,
};

/// Entry point of the `thinkmt` tool. `args` excludes the program name.
/// Subcommands: traces, forge, eval, compare, score.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thinkmt::cli
