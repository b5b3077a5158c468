#pragma once

#include <string>
#include <vector>

namespace twinet::app {

/// Entry point of the `twinet` tool. `args` includes the program name.
/// Returns the process exit status.
int run_command(const std::vector<std::string>& args);

/// Applies TWINET_LOG_LEVEL (trace, debug, info, warn, error, critical, off); default warn.
void configure_logging();

}  // namespace twinet::app
