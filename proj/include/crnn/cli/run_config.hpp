// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crnn/model/config.hpp"
#include "crnn/trainer/adam.hpp"

namespace crnn::cli {

/// Everything a command needs: model and optimizer settings plus paths.
struct RunConfig {
  model::CrnnConfig model;
  trainer::TrainConfig train;

  std::string train_path, dev_path, test_path;
  std::string embeddings_path, vocab_path, checkpoint_path, labels_path, grid_path;
  std::string out_dir = ".";
  std::string text;

  std::size_t num_classes = 0;  // 0: infer from the labels
  std::size_t min_count = 2;
  bool lowercase = true;
  std::size_t folds = 10;
  double dev_fraction = 0.1;
  std::size_t sample = 10;
};

using Settings = std::map<std::string, std::string>;

/// Setting keys in display order. Keys match the long flag names.
const std::vector<std::string>& setting_keys();

Settings to_settings(const RunConfig& cfg);

/// Throws DomainError on an unknown key or a malformed value.
RunConfig from_settings(const Settings& settings);

/// Flat `key = value` lines, `#` starts a comment; `_` in keys reads as `-`.
/// Throws FileError / FormatError.
Settings read_config_file(const std::filesystem::path& path);

/// Later maps win.
Settings merge(Settings base, const Settings& overrides);

/// `key = value` lines in setting_keys() order.
std::string format_settings(const Settings& settings);

}  // namespace crnn::cli
