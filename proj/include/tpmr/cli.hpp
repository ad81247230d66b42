#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tpmr {

/// Exit statuses of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitIo = 4,
};

/// Runs one invocation (args exclude the program name). Human-readable
/// progress goes to `out`, diagnostics to `err`; data files go to --out.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Built-in scenario text for a fig* preset, or empty when unknown.
std::string_view preset_text(std::string_view command);

}  // namespace tpmr
