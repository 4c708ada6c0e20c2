// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "crnn/numerics/matrix.hpp"

namespace crnn {

/// Scalar objective over a parameter set. Reads parameter values from the
/// slots; when `with_grad` is set it must also accumulate its reverse-mode
/// gradient into each slot's `grad`.
using Objective = std::function<double(std::span<GradSlot<double>> slots, bool with_grad)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::vector<double> per_slot;  // max relative error within each slot
  std::size_t worst_slot = 0;
  std::size_t worst_index = 0;
};

/// |a − b| / max(1e−8, |a| + |b|)
double relative_error(double analytic, double numeric);

/// Compares the objective's reverse-mode gradient with central differences
/// (f(θᵢ+ε) − f(θᵢ−ε)) / 2ε for every scalar of every slot.
/// Throws NumericError if the objective returns a non-finite value.
GradCheckResult grad_check(const Objective& f, std::span<GradSlot<double>> theta, double eps);

}  // namespace crnn
