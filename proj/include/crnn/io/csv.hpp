// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace crnn {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// RFC 4180 quoting: fields holding a comma, quote or newline are wrapped
/// in double quotes with inner quotes doubled.
std::string csv_field(const std::string& text);

/// Writes a header on construction and one line per row(). Throws FileError.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header);
  void row(const std::vector<std::string>& fields);

 private:
  void line(const std::vector<std::string>& fields);
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Splits one CSV line, honoring quotes.
std::vector<std::string> parse_csv_line(const std::string& line);

}  // namespace crnn
