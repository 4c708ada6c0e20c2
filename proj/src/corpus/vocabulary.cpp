// SPDX-License-Identifier: Apache-2.0
#include "crnn/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "crnn/errors.hpp"

namespace crnn::corpus {

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<TokenId>(id_to_token_.size());
  auto [it, inserted] = token_to_id_.emplace(token, id);
  if (!inserted) throw FormatError("duplicate vocabulary token '" + token + "'");
  id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> corpus, std::size_t min_count) {
  if (min_count < 1) throw DomainError("build_vocab: min_count must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, count] : counts)
    if (count >= min_count && tok != kPadToken && tok != kUnkToken) kept.emplace_back(tok, count);
  // counts is ordered lexicographically, so a stable sort on count keeps the tie order.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (auto& [tok, count] : kept) vocab.add(tok);
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary vocab;
  for (const auto& tok : tokens) vocab.add(tok);
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError(path.string() + ":" + std::to_string(tokens.size() + 1) + ": empty token");
    tokens.push_back(line);
  }
  return from_tokens(tokens);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write vocabulary file " + path.string());
  for (std::size_t i = kNumSpecials; i < id_to_token_.size(); ++i) out << id_to_token_[i] << '\n';
  if (!out) throw FileError("write failed for " + path.string());
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return token_to_id_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw DomainError("token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(id_to_token_.size()));
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {id_to_token_.begin() + kNumSpecials, id_to_token_.end()};
}

}  // namespace crnn::corpus
