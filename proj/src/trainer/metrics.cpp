// SPDX-License-Identifier: Apache-2.0
#include "crnn/trainer/metrics.hpp"

#include "crnn/errors.hpp"

namespace crnn::trainer {

MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  const std::size_t k = confusion.size();
  for (const auto& row : confusion)
    if (row.size() != k) throw ShapeError("confusion matrix must be square");

  MetricsReport r;
  r.precision.assign(k, 0.0);
  r.recall.assign(k, 0.0);
  r.f1.assign(k, 0.0);
  std::size_t correct = 0;
  std::vector<std::size_t> predicted(k, 0), support(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      r.total += confusion[i][j];
      support[i] += confusion[i][j];
      predicted[j] += confusion[i][j];
      if (i == j) correct += confusion[i][j];
    }
  r.accuracy = r.total ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(confusion[c][c]);
    if (predicted[c]) r.precision[c] = tp / static_cast<double>(predicted[c]);
    if (support[c]) r.recall[c] = tp / static_cast<double>(support[c]);
    const double denom = r.precision[c] + r.recall[c];
    r.f1[c] = denom > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / denom : 0.0;
    f1_sum += r.f1[c];
  }
  r.macro_f1 = k ? f1_sum / static_cast<double>(k) : 0.0;
  r.confusion = std::move(confusion);
  return r;
}

MetricsReport metrics_from_predictions(std::span<const int> gold, std::span<const int> predicted,
                                       std::size_t num_classes) {
  if (gold.size() != predicted.size()) throw ShapeError("gold and predicted label counts differ");
  std::vector<std::vector<std::size_t>> confusion(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || static_cast<std::size_t>(gold[i]) >= num_classes || predicted[i] < 0 ||
        static_cast<std::size_t>(predicted[i]) >= num_classes)
      throw DomainError("label outside [0, " + std::to_string(num_classes) + ")");
    ++confusion[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(predicted[i])];
  }
  return metrics_from_confusion(std::move(confusion));
}

}  // namespace crnn::trainer
