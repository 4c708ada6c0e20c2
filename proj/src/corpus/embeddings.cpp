// SPDX-License-Identifier: Apache-2.0
#include "crnn/corpus/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "crnn/errors.hpp"

namespace crnn::corpus {
namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

void fill_absent(EmbeddingTable& table, const std::vector<bool>& present, Rng& rng) {
  for (std::size_t id = 0; id < table.vectors.rows(); ++id) {
    if (present[id]) continue;
    for (float& v : table.vectors.row(id))
      v = static_cast<float>(rng.uniform(-kUnknownInitRange, kUnknownInitRange));
  }
  for (float& v : table.vectors.row(Vocabulary::kPadId)) v = 0.0f;
}

}  // namespace

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  if (dim == 0) throw DomainError("embedding dimension must be positive");
  EmbeddingTable table{Matrix(vocab.size(), dim), 0};
  std::vector<bool> present(vocab.size(), false);
  present[Vocabulary::kPadId] = true;
  fill_absent(table, present, rng);
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               Rng& rng) {
  if (dim == 0) throw DomainError("embedding dimension must be positive");
  std::ifstream in(path);
  if (!in) throw FileError("cannot read embedding file " + path.string());

  EmbeddingTable table{Matrix(vocab.size(), dim), 0};
  std::vector<bool> present(vocab.size(), false);
  present[Vocabulary::kPadId] = true;

  std::vector<float> values(dim);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };

    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, file_dim = 0;
      if (parse_number(fields[0], count) && parse_number(fields[1], file_dim)) {
        if (file_dim != dim)
          throw FormatError(where() + "file dimension " + std::to_string(file_dim) + " differs from expected " +
                            std::to_string(dim));
        continue;
      }
    }
    if (fields.size() != dim + 1)
      throw FormatError(where() + "expected token plus " + std::to_string(dim) + " values, found " +
                        std::to_string(fields.size() - 1));

    for (std::size_t k = 0; k < dim; ++k)
      if (!parse_number(fields[k + 1], values[k]) || !std::isfinite(values[k]))
        throw FormatError(where() + "bad number '" + std::string(fields[k + 1]) + "'");

    const TokenId id = vocab.id(fields[0]);
    if (!vocab.contains(fields[0]) || id == Vocabulary::kPadId) continue;
    std::copy(values.begin(), values.end(), table.vectors.row(static_cast<std::size_t>(id)).begin());
    if (!present[static_cast<std::size_t>(id)]) ++table.found;
    present[static_cast<std::size_t>(id)] = true;
  }
  fill_absent(table, present, rng);
  return table;
}

}  // namespace crnn::corpus
