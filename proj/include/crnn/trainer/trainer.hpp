// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "crnn/corpus/dataset.hpp"
#include "crnn/model/checkpoint.hpp"
#include "crnn/model/config.hpp"
#include "crnn/model/params.hpp"
#include "crnn/trainer/adam.hpp"
#include "crnn/trainer/metrics.hpp"

namespace crnn::trainer {

using corpus::Example;
using model::CrnnConfig;
using model::CrnnParams;

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> dev_accuracy;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Return false to stop after this epoch.
using EpochCallback = std::function<bool(const EpochRecord&, const CrnnParams<float>&)>;

struct TrainResult {
  CrnnParams<float> best;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;  // 0 when there is no dev set
  std::vector<EpochRecord> history;
};

/// Mini-batch Adam on the mean batch cross-entropy + L2. The parameters with
/// the best dev accuracy win (strict improvement; an empty dev set keeps the
/// last epoch). Training stops once `patience` consecutive epochs fail to
/// improve. Random streams derive from cfg.seed. Throws NumericError on a
/// non-finite loss.
TrainResult train(std::span<const Example> train_set, std::span<const Example> dev_set, const TrainConfig& cfg,
                  const CrnnConfig& model_cfg, CrnnParams<float> init, const EpochCallback& on_epoch = {});

/// Eval-mode predicted class per example.
std::vector<int> predict(const CrnnParams<float>& params, const CrnnConfig& cfg, std::span<const Example> data,
                         std::size_t threads = 1);

MetricsReport evaluate(const CrnnParams<float>& params, const CrnnConfig& cfg, std::span<const Example> data,
                       std::size_t threads = 1);
MetricsReport evaluate(const model::Checkpoint& ckpt, std::span<const Example> data, std::size_t threads = 1);

/// epoch,train_loss,dev_accuracy (empty when there was no dev set).
void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

}  // namespace crnn::trainer
