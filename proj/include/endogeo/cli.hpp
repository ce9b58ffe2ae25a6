#pragma once

#include <ostream>

namespace endogeo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

/// Entry point of the `endogeo` tool. Results go to `out` as key=value lines;
/// diagnostics go to `err`. Returns 0 on success, 1 on a domain error, 2 on a
/// usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace endogeo::cli
