// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "crnn/model/gradient_check.hpp"

using namespace crnn;
using namespace crnn::model;

TEST_CASE("full model gradient matches central differences") {
  for (bool ntl : {true, false}) {
    CAPTURE(ntl);
    auto p = tiny_problem(ntl, 7);
    auto check = check_model_gradient(p.config, p.params, p.batch, 1e-6);
    for (std::size_t i = 0; i < check.block_names.size(); ++i) {
      CAPTURE(check.block_names[i]);
      CHECK(check.result.per_slot[i] <= 1e-3);
    }
  }
}

TEST_CASE("gradient check sees dropout masks replayed") {
  auto p = tiny_problem(true, 11);
  p.config.dropout_rate = 0.3;
  auto check = check_model_gradient(p.config, p.params, p.batch, 1e-6, 99);
  CHECK(check.result.max_relative_error <= 1e-3);
}

TEST_CASE("corrupted gradient is detected") {
  auto p = tiny_problem(true, 7);
  set_gradient_corruption(0.05);
  auto check = check_model_gradient(p.config, p.params, p.batch, 1e-6);
  set_gradient_corruption(0.0);
  CHECK(check.result.max_relative_error > 1e-3);
}
