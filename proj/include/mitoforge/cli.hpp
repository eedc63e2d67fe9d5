#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mitoforge::cli {

// Stable process exit codes.
enum ExitStatus : int {
  kSuccess = 0,
  kValidationError = 1,  // bad flags, invalid input, alignment, labels
  kIoError = 2,
  kCheckFailed = 3,  // property check such as `lora gradcheck` failed
};

// Runs the `mitoforge` command line. `args` excludes the program name.
// Machine output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mitoforge::cli
