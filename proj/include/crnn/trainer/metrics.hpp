// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crnn::trainer {

struct MetricsReport {
  std::size_t total = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision, recall, f1;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Per-class F1 is 0 when precision + recall = 0; precision (recall) is 0
/// when nothing was predicted as (belongs to) the class.
MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);

MetricsReport metrics_from_predictions(std::span<const int> gold, std::span<const int> predicted,
                                       std::size_t num_classes);

/// Index of the largest entry; the lowest index wins ties.
template <typename T>
int argmax(std::span<const T> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

}  // namespace crnn::trainer
