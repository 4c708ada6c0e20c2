// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crnn/corpus/dataset.hpp"
#include "crnn/numerics/rng.hpp"

namespace crnn::corpus {

/// B examples padded to a common width with the pad id.
struct Batch {
  std::size_t width = 0;        // n_max
  std::vector<TokenId> ids;     // B×width, row-major
  std::vector<std::size_t> lengths;
  std::vector<int> labels;

  std::size_t size() const noexcept { return lengths.size(); }
  std::span<const TokenId> row(std::size_t i) const { return {ids.data() + i * width, width}; }
};

/// Partitions `examples` into batches of `batch_size` (last one may be
/// smaller). When `shuffle` is non-null the order is permuted first.
std::vector<Batch> make_batches(std::span<const Example> examples, std::size_t batch_size, TokenId pad_id,
                                Rng* shuffle = nullptr);

}  // namespace crnn::corpus
