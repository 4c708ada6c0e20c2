// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crnn/corpus/batching.hpp"
#include "crnn/model/config.hpp"
#include "crnn/model/params.hpp"
#include "crnn/numerics/grad_check.hpp"

namespace crnn::model {

struct ModelGradCheck {
  GradCheckResult result;
  std::vector<std::string> block_names;  // aligned with result.per_slot
};

/// Finite-difference check of the full batch loss (cross-entropy + L2) in
/// double precision. Dropout masks are replayed from `dropout_seed` on every
/// evaluation, so dropout > 0 is checkable too. The embedding table is
/// included as a parameter block.
ModelGradCheck check_model_gradient(const CrnnConfig& cfg, const CrnnParams<double>& params,
                                    const corpus::Batch& batch, double eps = 1e-6,
                                    std::uint64_t dropout_seed = 0);

/// Small model (d=4, m=3, widths {1,3}, l=6, z=2, K=2, λ=0.001, no dropout)
/// and a two-example batch: a 5-word sentence and a padded 3-word one.
struct TinyProblem {
  CrnnConfig config;
  CrnnParams<double> params;
  corpus::Batch batch;
};
TinyProblem tiny_problem(bool use_ntl, std::uint64_t seed);

/// Test hook: adds `delta` to one analytic gradient entry after backprop.
void set_gradient_corruption(double delta) noexcept;

}  // namespace crnn::model
