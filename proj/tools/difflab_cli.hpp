#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace difflab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDomain = 2;

/// Runs one `difflab` invocation. `args` excludes the program name.
/// Tabular results without an `--out` path go to `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace difflab::cli
