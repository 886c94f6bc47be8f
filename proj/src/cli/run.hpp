#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace dem::cli {

enum ExitCode : int { kSuccess = 0, kVerdictFail = 1, kInvalid = 2 };

/// Entry point of `demtool`. `args` excludes the program name. Reports and
/// primary artifacts go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env);

/// Smallest lambda whose raw failure bound is at most `target` (bisection);
/// the lambda field of `params` is ignored.
double lambda_for_target(const TheoremParams& params, double target);

}  // namespace dem::cli
