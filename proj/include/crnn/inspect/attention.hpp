// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crnn/corpus/dataset.hpp"
#include "crnn/model/checkpoint.hpp"
#include "crnn/numerics/rng.hpp"

namespace crnn::inspect {

struct AttentionReport {
  std::vector<std::string> tokens;       // as written, after tokenization
  std::vector<corpus::TokenId> ids;      // unknown words map to <UNK>
  Matrix weights;                        // n×z, the model's A
  int predicted = 0;
  std::vector<float> probs;              // K

  bool unknown(std::size_t i) const noexcept { return ids[i] == corpus::Vocabulary::kUnkId; }
};

/// Tokenizes with the checkpoint's settings and runs an eval-mode forward.
/// Throws DomainError when the text has no tokens.
AttentionReport attention_report(const model::Checkpoint& ckpt, std::string_view text);

struct WordCount {
  std::string word;
  std::size_t count = 0;

  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Per gold class, words ranked by how often they sit at a hop's maximum
/// (count descending, then word ascending).
struct ImportantWordTable {
  std::vector<std::vector<WordCount>> per_class;

  std::size_t total(std::size_t cls) const;
};

/// For every example (only class `class_filter` if given) and every hop,
/// counts the vocabulary token at the hop's argmax row; the earliest
/// position wins ties.
ImportantWordTable important_words(const model::Checkpoint& ckpt, std::span<const corpus::Example> data,
                                   std::optional<int> class_filter = std::nullopt);

/// Argmax row of every column of `weights` over its first `valid_len` rows.
std::vector<std::size_t> hop_argmax(const Matrix& weights, std::size_t valid_len);

/// Up to `count` distinct words drawn uniformly from one class's table.
std::vector<std::string> sample_important_words(const ImportantWordTable& table, std::size_t cls, std::size_t count,
                                                Rng& rng);

/// Per hop, 100·w/max(w) for each token (a hop of all zeros stays zero).
std::vector<std::vector<double>> heatmap_intensities(const Matrix& weights);

std::string html_escape(std::string_view text);

/// Standalone HTML page: one row per hop, tokens shaded by intensity.
std::string render_heatmap_html(const AttentionReport& report, std::span<const std::string> label_names = {});
void render_heatmap(const AttentionReport& report, const std::filesystem::path& path,
                    std::span<const std::string> label_names = {});

/// {tokens, weights (z rows of n), predicted, probs}
nlohmann::json report_json(const AttentionReport& report);
void write_report_json(const AttentionReport& report, const std::filesystem::path& path);

}  // namespace crnn::inspect
