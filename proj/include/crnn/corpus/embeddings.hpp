// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>

#include "crnn/corpus/vocabulary.hpp"
#include "crnn/numerics/matrix.hpp"
#include "crnn/numerics/rng.hpp"

namespace crnn::corpus {

inline constexpr double kUnknownInitRange = 0.25;

/// One row per vocabulary id. The pad row is all zeros.
struct EmbeddingTable {
  Matrix vectors;
  std::size_t found = 0;  // rows copied from a pretrained file

  std::size_t dim() const noexcept { return vectors.cols(); }
};

/// Every row uniform in [−0.25, 0.25] except the zero pad row.
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng);

/// Reads a word2vec-style text file (optional "<count> <dim>" header, then
/// "token v1 … vd" lines). Rows for tokens in the file are copied verbatim,
/// the rest are drawn as in random_embeddings, in id order.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               Rng& rng);

}  // namespace crnn::corpus
