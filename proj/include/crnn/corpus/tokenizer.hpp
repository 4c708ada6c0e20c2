// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crnn::corpus {

/// Splits on whitespace, then separates punctuation from words.
///
/// Word characters are ASCII alphanumerics and any byte >= 0x80 (so UTF-8
/// sequences stay intact). A hyphen between two word characters stays inside
/// the word ("co-writer"). An apostrophe that follows a word and precedes a
/// letter opens a clitic token ("it's" -> "it", "'s"). Any other punctuation
/// character becomes its own token, with runs of the same character merged
/// ("..." stays one token). Lowercasing touches ASCII letters only.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

}  // namespace crnn::corpus
