#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hsrobust::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;   ///< bad flags, config file, or input data
inline constexpr int kExitFit = 3;      ///< estimation or selection failed
inline constexpr int kExitHarness = 4;  ///< simulation failure rate exceeded

/// Runs one invocation; args[0] is the program name. JSON goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsrobust::cli
