// SPDX-License-Identifier: Apache-2.0
#include "crnn/inspect/attention.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "crnn/corpus/tokenizer.hpp"
#include "crnn/errors.hpp"
#include "crnn/model/crnn.hpp"
#include "crnn/trainer/metrics.hpp"

namespace crnn::inspect {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw FileError("write failed: " + path.string());
}

}  // namespace

AttentionReport attention_report(const model::Checkpoint& ckpt, std::string_view text) {
  AttentionReport r;
  r.tokens = corpus::tokenize(text, ckpt.lowercase);
  if (r.tokens.empty()) throw DomainError("text has no tokens");
  r.ids = ckpt.vocab.encode(r.tokens);
  const auto tr = model::forward_example<float>(ckpt.params, ckpt.config, r.ids, r.ids.size(), model::Mode::eval);
  r.weights = tr.a;
  r.probs.assign(tr.probs.flat().begin(), tr.probs.flat().end());
  r.predicted = trainer::argmax<float>(r.probs);
  return r;
}

std::size_t ImportantWordTable::total(std::size_t cls) const {
  std::size_t n = 0;
  for (const auto& w : per_class.at(cls)) n += w.count;
  return n;
}

std::vector<std::size_t> hop_argmax(const Matrix& weights, std::size_t valid_len) {
  std::vector<std::size_t> out(weights.cols(), 0);
  for (std::size_t j = 0; j < weights.cols(); ++j)
    for (std::size_t i = 1; i < valid_len; ++i)
      if (weights(i, j) > weights(out[j], j)) out[j] = i;
  return out;
}

ImportantWordTable important_words(const model::Checkpoint& ckpt, std::span<const corpus::Example> data,
                                   std::optional<int> class_filter) {
  const std::size_t k = ckpt.config.num_classes;
  std::vector<std::map<std::string, std::size_t>> counts(k);
  for (const auto& ex : data) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= k)
      throw DomainError("example label outside the checkpoint's classes");
    if (class_filter && ex.label != *class_filter) continue;
    if (ex.token_ids.empty()) continue;
    const auto tr = model::forward_example<float>(ckpt.params, ckpt.config, ex.token_ids, ex.token_ids.size(),
                                                  model::Mode::eval);
    for (auto row : hop_argmax(tr.a, ex.token_ids.size()))
      ++counts[static_cast<std::size_t>(ex.label)][ckpt.vocab.token(ex.token_ids[row])];
  }
  ImportantWordTable table;
  table.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& list = table.per_class[c];
    for (const auto& [word, n] : counts[c]) list.push_back({word, n});
    std::stable_sort(list.begin(), list.end(), [](const WordCount& a, const WordCount& b) { return a.count > b.count; });
  }
  return table;
}

std::vector<std::string> sample_important_words(const ImportantWordTable& table, std::size_t cls, std::size_t count,
                                                Rng& rng) {
  std::vector<std::string> words;
  for (const auto& w : table.per_class.at(cls)) words.push_back(w.word);
  rng.shuffle(std::span<std::string>(words));
  if (words.size() > count) words.resize(count);
  return words;
}

std::vector<std::vector<double>> heatmap_intensities(const Matrix& weights) {
  std::vector<std::vector<double>> out(weights.cols(), std::vector<double>(weights.rows(), 0.0));
  for (std::size_t j = 0; j < weights.cols(); ++j) {
    double peak = 0.0;
    for (std::size_t i = 0; i < weights.rows(); ++i) peak = std::max(peak, static_cast<double>(weights(i, j)));
    if (peak <= 0.0) continue;
    for (std::size_t i = 0; i < weights.rows(); ++i) out[j][i] = 100.0 * static_cast<double>(weights(i, j)) / peak;
  }
  return out;
}

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_heatmap_html(const AttentionReport& report, std::span<const std::string> label_names) {
  const auto intensity = heatmap_intensities(report.weights);
  auto label = [&](int c) {
    const auto i = static_cast<std::size_t>(c);
    return i < label_names.size() ? html_escape(label_names[i]) : std::to_string(c);
  };
  std::string html;
  html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n<title>attention heatmap</title>\n";
  html +=
      "<style>\n"
      "body { font-family: sans-serif; margin: 1.5em; }\n"
      ".hop { margin: 0.4em 0; line-height: 1.9; }\n"
      ".hop-label { display: inline-block; width: 4em; color: #666; font-size: 0.85em; }\n"
      ".tok { padding: 0.15em 0.2em; margin-right: 0.15em; border-radius: 3px; }\n"
      ".unk { border-bottom: 1px dotted #888; }\n"
      "</style>\n</head>\n<body>\n";
  html += "<p class=\"prediction\">predicted: " + label(report.predicted) + " (";
  char buf[64];
  for (std::size_t c = 0; c < report.probs.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%s%s: %.4f", c ? ", " : "", label(static_cast<int>(c)).c_str(),
                  static_cast<double>(report.probs[c]));
    html += buf;
  }
  html += ")</p>\n";
  for (std::size_t j = 0; j < intensity.size(); ++j) {
    html += "<div class=\"hop\" data-hop=\"" + std::to_string(j + 1) + "\"><span class=\"hop-label\">hop " +
            std::to_string(j + 1) + "</span>";
    for (std::size_t i = 0; i < report.tokens.size(); ++i) {
      const double v = intensity[j][i];
      std::snprintf(buf, sizeof buf, "%.2f", v);
      const std::string pct = buf;
      std::snprintf(buf, sizeof buf, "rgba(220, 40, 40, %.4f)", v / 100.0);
      html += "<span class=\"tok";
      if (report.unknown(i)) html += " unk";
      html += "\" data-intensity=\"" + pct + "\" style=\"background-color: " + buf + "\" title=\"" + pct + "\">" +
              html_escape(report.tokens[i]) + "</span>";
    }
    html += "</div>\n";
  }
  html += "</body>\n</html>\n";
  return html;
}

void render_heatmap(const AttentionReport& report, const std::filesystem::path& path,
                    std::span<const std::string> label_names) {
  write_text(path, render_heatmap_html(report, label_names));
}

nlohmann::json report_json(const AttentionReport& report) {
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t j = 0; j < report.weights.cols(); ++j) {
    nlohmann::json hop = nlohmann::json::array();
    for (std::size_t i = 0; i < report.weights.rows(); ++i) hop.push_back(report.weights(i, j));
    weights.push_back(std::move(hop));
  }
  return {{"tokens", report.tokens}, {"weights", std::move(weights)}, {"predicted", report.predicted},
          {"probs", report.probs}};
}

void write_report_json(const AttentionReport& report, const std::filesystem::path& path) {
  write_text(path, report_json(report).dump(2) + "\n");
}

}  // namespace crnn::inspect
