// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "crnn/trainer/trainer.hpp"

namespace crnn::trainer {

/// Hyperparameter lists searched as a Cartesian product, iterated with
/// filter sizes outermost, then hops, lambda and filter count.
struct GridSpec {
  std::vector<std::vector<std::size_t>> filter_size_sets;
  std::vector<std::size_t> hops;
  std::vector<double> lambdas;
  std::vector<std::size_t> num_filters;

  std::size_t size() const noexcept {
    return filter_size_sets.size() * hops.size() * lambdas.size() * num_filters.size();
  }
  void validate() const;
  /// Every grid point applied on top of `base`, in iteration order.
  std::vector<CrnnConfig> expand(const CrnnConfig& base) const;
};

/// Reads `key = value` lines (`#` comments): filter_sizes takes `|`-separated
/// comma lists, the other keys comma-separated numbers. Throws FormatError.
GridSpec load_grid_spec(const std::filesystem::path& path);

struct GridRow {
  CrnnConfig config;
  double dev_accuracy = 0.0;
};

struct GridResult {
  CrnnConfig best;
  double best_dev_accuracy = 0.0;
  std::vector<GridRow> rows;
};

/// Trains one model per grid point from Glorot init seeded by cfg.seed and a
/// copy of `embedding`. The first point with the highest dev accuracy wins.
GridResult grid_search(std::span<const Example> train_set, std::span<const Example> dev_set, const GridSpec& grid,
                       const TrainConfig& cfg, const CrnnConfig& base, const Matrix& embedding);

/// filter_sizes,hops,lambda,num_filters,dev_accuracy
void write_grid_csv(const std::filesystem::path& path, std::span<const GridRow> rows);

struct CvResult {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

/// k folds from cfg.seed; inside each fold a seeded `dev_fraction` of the
/// training portion is held out for model selection (0 disables it).
CvResult cross_validate(std::span<const Example> data, std::size_t k, const TrainConfig& cfg,
                        const CrnnConfig& model_cfg, const Matrix& embedding, double dev_fraction = 0.1);

/// fold,accuracy rows then a `mean` row.
void write_cv_csv(const std::filesystem::path& path, const CvResult& result);

/// Fresh parameters for `model_cfg` seeded from the run seed's init stream.
CrnnParams<float> initial_params(const CrnnConfig& model_cfg, const Matrix& embedding, std::uint64_t seed);

}  // namespace crnn::trainer
