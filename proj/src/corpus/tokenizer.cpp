// SPDX-License-Identifier: Apache-2.0
#include "crnn/corpus/tokenizer.hpp"

#include <cctype>

namespace crnn::corpus {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_word(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool is_alpha(unsigned char c) { return std::isalpha(c) || c >= 0x80; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  const std::size_t n = text.size();
  auto at = [&](std::size_t i) -> unsigned char { return i < n ? static_cast<unsigned char>(text[i]) : 0; };

  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = at(i);
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (is_word(c)) {
      while (j < n && (is_word(at(j)) || (at(j) == '-' && j > i && is_word(at(j + 1))))) ++j;
    } else if (c == '\'' && i > 0 && is_word(at(i - 1)) && is_alpha(at(i + 1))) {
      j = i + 1;
      while (j < n && is_alpha(at(j))) ++j;
    } else {
      while (j < n && at(j) == c) ++j;
    }
    std::string tok(text.substr(i, j - i));
    if (lowercase)
      for (char& ch : tok)
        if (static_cast<unsigned char>(ch) < 0x80) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    tokens.push_back(std::move(tok));
    i = j;
  }
  return tokens;
}

}  // namespace crnn::corpus
