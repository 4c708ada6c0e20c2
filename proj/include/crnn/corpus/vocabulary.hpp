// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crnn::corpus {

using TokenId = std::int32_t;

/// Token <-> id map. Ids 0 and 1 are always the padding and unknown tokens.
class Vocabulary {
 public:
  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr std::size_t kNumSpecials = 2;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  Vocabulary();

  /// Retains tokens seen at least `min_count` times. Ids follow the specials,
  /// ordered by descending count with ties broken lexicographically.
  static Vocabulary build(std::span<const std::vector<std::string>> corpus, std::size_t min_count);

  /// Builds from an ordered list of non-special tokens (vocabulary file layout).
  static Vocabulary from_tokens(std::span<const std::string> tokens);

  /// One token per line; line index + kNumSpecials = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId pad_id() const noexcept { return kPadId; }
  TokenId unk_id() const noexcept { return kUnkId; }
  std::size_t min_count() const noexcept { return min_count_; }
  std::size_t size() const noexcept { return id_to_token_.size(); }

  /// Unknown tokens map to unk_id().
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  /// Non-special tokens in id order (what `save` writes).
  std::vector<std::string> regular_tokens() const;

 private:
  void add(std::string token);

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::size_t min_count_ = 1;
};

}  // namespace crnn::corpus
