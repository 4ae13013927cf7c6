#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ergoid {

/// Exit statuses of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_failure = 2;

/// Logs go to stderr at the ERGOID_LOG level (error, warn, info, debug); default warn.
void configure_logging();

/// Entry point of the `ergoid` tool. Results go to files under --out and a
/// short summary to `out`; diagnostics go to `err`.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ergoid
