// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crnn/corpus/vocabulary.hpp"
#include "crnn/numerics/rng.hpp"

namespace crnn::corpus {

/// Label names; line index in the map file is the class id.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);
  static LabelMap load(const std::filesystem::path& path);

  std::optional<int> find(const std::string& name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

struct LabeledText {
  int label = 0;
  std::vector<std::string> tokens;
};

struct Example {
  std::vector<TokenId> token_ids;
  int label = 0;
};

struct LoadStats {
  std::size_t lines = 0;
  std::size_t skipped_empty = 0;  // lines whose text produced no tokens
};

/// Reads `<label>\t<text>` lines. Integer labels are used as-is unless a label
/// map is supplied, in which case every label is resolved by name.
std::vector<LabeledText> load_dataset(const std::filesystem::path& path, const LabelMap* labels = nullptr,
                                      bool lowercase = true, LoadStats* stats = nullptr);

/// Largest label + 1.
int infer_class_count(std::span<const LabeledText> data);

std::vector<Example> encode(std::span<const LabeledText> data, const Vocabulary& vocab);

std::vector<std::vector<std::string>> token_lists(std::span<const LabeledText> data);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Deterministic shuffle, then k near-equal disjoint test folds. The first
/// (size mod k) folds hold one extra example. Throws DomainError when k < 2
/// or k > size.
std::vector<Split> kfold(std::size_t size, std::size_t k, std::uint64_t seed);

/// Seeded split of `indices` into (train, held_out) with round(fraction·size)
/// held out; at least one example stays on the train side.
Split holdout(std::span<const std::size_t> indices, double fraction, std::uint64_t seed);

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

}  // namespace crnn::corpus
