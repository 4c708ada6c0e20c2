// SPDX-License-Identifier: Apache-2.0
#include "crnn/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "crnn/corpus/batching.hpp"
#include "crnn/errors.hpp"
#include "crnn/model/crnn.hpp"
#include "crnn/io/csv.hpp"

namespace crnn::trainer {

TrainResult train(std::span<const Example> train_set, std::span<const Example> dev_set, const TrainConfig& cfg,
                  const CrnnConfig& model_cfg, CrnnParams<float> init, const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (train_set.empty()) throw DomainError("train: empty training set");

  const Rng root(cfg.seed);
  Rng shuffle_rng = root.split("shuffle");
  Rng dropout_rng = root.split("dropout");

  TrainResult result;
  CrnnParams<float> params = std::move(init);
  auto state = AdamState<float>::like(params);
  CrnnParams<float> grads = params.zeros_like();
  double best_acc = -1.0;
  std::size_t bad_epochs = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = corpus::make_batches(train_set, cfg.batch_size, corpus::Vocabulary::kPadId, &shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const float loss =
          model::batch_gradient(batches[b], params, model_cfg, model::Mode::train, &dropout_rng, grads, cfg.threads);
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      adam_update(params, grads, state, cfg);
      loss_sum += loss;
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(batches.size()), std::nullopt};
    bool improved = false;
    if (!dev_set.empty()) {
      rec.dev_accuracy = evaluate(params, model_cfg, dev_set, cfg.threads).accuracy;
      improved = *rec.dev_accuracy > best_acc;
    }
    if (dev_set.empty() || improved) {
      result.best = params;
      result.best_epoch = epoch;
      if (improved) best_acc = *rec.dev_accuracy;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (rec.dev_accuracy)
      spdlog::info("epoch {:>3}  loss {:.5f}  dev acc {:.4f}", epoch, rec.train_loss, *rec.dev_accuracy);
    else
      spdlog::info("epoch {:>3}  loss {:.5f}", epoch, rec.train_loss);
    result.history.push_back(rec);

    if (on_epoch && !on_epoch(rec, params)) break;
    if (bad_epochs > cfg.patience) {
      spdlog::info("no dev improvement for {} epochs, stopping", bad_epochs);
      break;
    }
  }
  if (result.history.empty()) result.best = std::move(params);
  result.best_dev_accuracy = std::max(best_acc, 0.0);
  return result;
}

std::vector<int> predict(const CrnnParams<float>& params, const CrnnConfig& cfg, std::span<const Example> data,
                         std::size_t threads) {
  std::vector<int> out(data.size(), 0);
  auto run = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < data.size(); i += step) {
      const auto& ids = data[i].token_ids;
      const auto tr = model::forward_example<float>(params, cfg, ids, ids.size(), model::Mode::eval);
      out[i] = argmax<float>(tr.probs.flat());
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, data.size()));
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) workers.emplace_back(run, t, threads);
  }
  return out;
}

MetricsReport evaluate(const CrnnParams<float>& params, const CrnnConfig& cfg, std::span<const Example> data,
                       std::size_t threads) {
  const auto predicted = predict(params, cfg, data, threads);
  std::vector<int> gold;
  gold.reserve(data.size());
  for (const auto& e : data) gold.push_back(e.label);
  return metrics_from_predictions(gold, predicted, cfg.num_classes);
}

MetricsReport evaluate(const model::Checkpoint& ckpt, std::span<const Example> data, std::size_t threads) {
  return evaluate(ckpt.params, ckpt.config, data, threads);
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  CsvWriter csv(path, {"epoch", "train_loss", "dev_accuracy"});
  for (const auto& r : history)
    csv.row({std::to_string(r.epoch), format_double(r.train_loss),
             r.dev_accuracy ? format_double(*r.dev_accuracy) : std::string{}});
}

}  // namespace crnn::trainer
