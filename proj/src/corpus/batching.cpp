// SPDX-License-Identifier: Apache-2.0
#include "crnn/corpus/batching.hpp"

#include <algorithm>
#include <numeric>

#include "crnn/errors.hpp"

namespace crnn::corpus {

std::vector<Batch> make_batches(std::span<const Example> examples, std::size_t batch_size, TokenId pad_id,
                                Rng* shuffle) {
  if (batch_size < 1) throw DomainError("batch_size must be at least 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) shuffle->shuffle(std::span(order));

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    for (std::size_t i = start; i < end; ++i) b.width = std::max(b.width, examples[order[i]].token_ids.size());
    b.ids.assign((end - start) * b.width, pad_id);
    for (std::size_t i = start; i < end; ++i) {
      const auto& ex = examples[order[i]];
      std::copy(ex.token_ids.begin(), ex.token_ids.end(), b.ids.begin() + static_cast<std::ptrdiff_t>((i - start) * b.width));
      b.lengths.push_back(ex.token_ids.size());
      b.labels.push_back(ex.label);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace crnn::corpus
