// SPDX-License-Identifier: Apache-2.0
#include "crnn/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crnn/errors.hpp"

namespace crnn {
namespace {

double checked(double v, const char* where) {
  if (!std::isfinite(v)) throw NumericError(std::string("grad_check: non-finite objective ") + where);
  return v;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult grad_check(const Objective& f, std::span<GradSlot<double>> theta, double eps) {
  if (!(eps > 0.0)) throw DomainError("grad_check: eps must be positive");
  for (auto& slot : theta) slot.zero_grad();
  checked(f(theta, true), "at θ");

  GradCheckResult result;
  result.per_slot.assign(theta.size(), 0.0);
  for (std::size_t s = 0; s < theta.size(); ++s) {
    auto& slot = theta[s];
    for (std::size_t i = 0; i < slot.value.size(); ++i) {
      const double original = slot.value[i];
      slot.value[i] = original + eps;
      const double up = checked(f(theta, false), "at θ+ε");
      slot.value[i] = original - eps;
      const double down = checked(f(theta, false), "at θ−ε");
      slot.value[i] = original;

      const double err = relative_error(slot.grad[i], (up - down) / (2.0 * eps));
      result.per_slot[s] = std::max(result.per_slot[s], err);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_slot = s;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace crnn
