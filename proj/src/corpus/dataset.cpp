// SPDX-License-Identifier: Apache-2.0
#include "crnn/corpus/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "crnn/corpus/tokenizer.hpp"
#include "crnn/errors.hpp"

namespace crnn::corpus {

LabelMap::LabelMap(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (!ids_.emplace(names_[i], static_cast<int>(i)).second)
      throw FormatError("duplicate label '" + names_[i] + "'");
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read label map " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(line);
  }
  return LabelMap(std::move(names));
}

std::optional<int> LabelMap::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<LabeledText> load_dataset(const std::filesystem::path& path, const LabelMap* labels, bool lowercase,
                                      LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read dataset " + path.string());
  std::vector<LabeledText> data;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++local.lines;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(where + "expected <label>\\t<text>");
    const std::string label_text = line.substr(0, tab);

    int label = -1;
    if (labels) {
      auto id = labels->find(label_text);
      if (!id) throw FormatError(where + "label '" + label_text + "' not in label map");
      label = *id;
    } else {
      auto [ptr, ec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
      if (ec != std::errc{} || ptr != label_text.data() + label_text.size() || label < 0)
        throw FormatError(where + "label '" + label_text + "' is not a non-negative integer (use a label map)");
    }

    auto tokens = tokenize(std::string_view(line).substr(tab + 1), lowercase);
    if (tokens.empty()) {
      ++local.skipped_empty;
      continue;
    }
    data.push_back({label, std::move(tokens)});
  }
  if (stats) *stats = local;
  return data;
}

int infer_class_count(std::span<const LabeledText> data) {
  int k = 0;
  for (const auto& ex : data) k = std::max(k, ex.label + 1);
  return k;
}

std::vector<Example> encode(std::span<const LabeledText> data, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back({vocab.encode(ex.tokens), ex.label});
  return out;
}

std::vector<std::vector<std::string>> token_lists(std::span<const LabeledText> data) {
  std::vector<std::vector<std::string>> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ex.tokens);
  return out;
}

std::vector<Split> kfold(std::size_t size, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DomainError("kfold: k must be at least 2");
  if (k > size)
    throw DomainError("kfold: k=" + std::to_string(k) + " exceeds dataset size " + std::to_string(size));
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));

  std::vector<Split> folds(k);
  const std::size_t base = size / k, extra = size % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].test.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                         order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].test.begin(), folds[g].test.end());
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].test.begin(), folds[f].test.end());
  }
  return folds;
}

Split holdout(std::span<const std::size_t> indices, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(indices.begin(), indices.end());
  Rng rng(seed);
  rng.shuffle(std::span(order));
  auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  if (!order.empty()) held = std::min(held, order.size() - 1);
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace crnn::corpus
