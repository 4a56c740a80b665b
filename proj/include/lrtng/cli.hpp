#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lrtng::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kNumeric = 3,
};

/// Entry point of the `lrtng` tool; args exclude the program name.
/// Diagnostics go to `err`, everything else to `out`.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lrtng::cli
