// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace crnn::cli {

/// Parses the command line, runs the chosen subcommand and returns the
/// process exit code (0 ok, 1 numeric failure, 2 usage or config error).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// Applies CRNN_LOG (quiet, info, debug) to the global logger.
void configure_logging();

}  // namespace crnn::cli
