#pragma once

#include <iosfwd>

namespace jetcalc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerdictNegative = 1,  // the check ran and the property failed
  kExitUsage = 2,            // bad flags, expressions or input documents
  kExitNumerical = 3,        // evaluation left its domain, overflow
};

/// Entry point of the jetcalc tool. Reports go to `out` (or --out), errors
/// to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jetcalc
