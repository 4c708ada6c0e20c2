// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include "crnn/model/params.hpp"

namespace crnn::trainer {

/// Optimization settings. Dropout rate and the L2 weight live on the model
/// config because the loss itself depends on them.
struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

template <typename T>
struct AdamState {
  model::CrnnParams<T> first;   // m
  model::CrnnParams<T> second;  // v
  std::size_t step = 0;

  static AdamState like(const model::CrnnParams<T>& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

/// One bias-corrected Adam step. The pad embedding row is never touched.
template <typename T>
void adam_update(model::CrnnParams<T>& params, const model::CrnnParams<T>& grads, AdamState<T>& state,
                 const TrainConfig& cfg);

}  // namespace crnn::trainer
