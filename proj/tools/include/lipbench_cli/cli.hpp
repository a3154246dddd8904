#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lipbench::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,   // bad flags, bad config, missing files
  kExitNumeric = 3, // training diverged
};

/// args excludes the program name: {"nfr", "--n", "16", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Raises glibc's mmap threshold so large per-step temporaries are reused
/// instead of being mapped and faulted in on every training step.
void tune_allocator();

}  // namespace lipbench::cli
