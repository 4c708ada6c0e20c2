// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace crnn::model {

struct CrnnConfig {
  std::size_t embed_dim = 300;                    // d
  std::size_t hidden = 50;                        // m
  std::vector<std::size_t> filter_sizes{3, 4, 5}; // window widths k, strictly ascending
  std::size_t num_filters = 300;                  // l, across all widths
  std::size_t hops = 5;                           // z
  std::size_t num_classes = 2;                    // K
  bool use_ntl = true;
  double dropout_rate = 0.5;
  double lambda = 1e-4;
  /// Also apply L2 to biases and the embedding table (pad row excluded).
  bool regularize_all = false;

  /// Width r of a contextual word representation: 3m with the tensor layer, 2m without.
  std::size_t rep_width() const noexcept { return (use_ntl ? 3 : 2) * hidden; }

  /// Filter count per width: l split evenly, remainder to the smallest widths first.
  std::vector<std::size_t> filters_per_size() const;

  /// Throws DomainError on an inconsistent configuration.
  void validate() const;

  friend bool operator==(const CrnnConfig&, const CrnnConfig&) = default;
};

std::string format_sizes(const std::vector<std::size_t>& sizes);
/// Parses "3,4,5" into a sorted, de-duplicated list. Throws DomainError on junk.
std::vector<std::size_t> parse_sizes(const std::string& text);

}  // namespace crnn::model
