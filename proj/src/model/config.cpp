// SPDX-License-Identifier: Apache-2.0
#include "crnn/model/config.hpp"

#include <algorithm>
#include <charconv>

#include "crnn/errors.hpp"

namespace crnn::model {

std::vector<std::size_t> CrnnConfig::filters_per_size() const {
  std::vector<std::size_t> counts(filter_sizes.size(), 0);
  if (filter_sizes.empty()) return counts;
  const std::size_t base = num_filters / filter_sizes.size();
  const std::size_t extra = num_filters % filter_sizes.size();
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = base + (i < extra ? 1 : 0);
  return counts;
}

void CrnnConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("invalid model config: " + msg); };
  if (embed_dim < 1) fail("embedding dimension must be positive");
  if (hidden < 1) fail("hidden size must be positive");
  if (filter_sizes.empty()) fail("at least one filter size is required");
  for (std::size_t i = 0; i < filter_sizes.size(); ++i) {
    if (filter_sizes[i] < 1) fail("filter sizes must be >= 1");
    if (i > 0 && filter_sizes[i] <= filter_sizes[i - 1]) fail("filter sizes must be strictly ascending");
  }
  if (num_filters < filter_sizes.size()) fail("need at least one filter per size");
  if (hops < 1) fail("hops must be >= 1");
  if (num_classes < 2) fail("need at least two classes");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout rate must lie in [0, 1)");
  if (!(lambda >= 0.0)) fail("lambda must be non-negative");
}

std::string format_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sizes[i]);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    std::string field = text.substr(pos, next - pos);
    field.erase(0, field.find_first_not_of(" \t"));
    field.erase(field.find_last_not_of(" \t") + 1);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || v == 0)
      throw DomainError("bad filter size list '" + text + "'");
    sizes.push_back(v);
    pos = next + 1;
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

}  // namespace crnn::model
