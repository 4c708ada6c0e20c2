// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

#include "crnn/cli/run_config.hpp"

namespace crnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitUsage = 2;

/// Each command writes results to `out` and returns an exit code. Errors
/// surface as exceptions; the caller maps them to exit codes.
int cmd_build_vocab(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_predict(const RunConfig& cfg, std::ostream& out);
int cmd_inspect(const RunConfig& cfg, std::ostream& out);
int cmd_grid_search(const RunConfig& cfg, std::ostream& out);
int cmd_cv(const RunConfig& cfg, std::ostream& out);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, double corrupt_gradient = 0.0);

}  // namespace crnn::cli
