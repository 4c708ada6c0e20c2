// SPDX-License-Identifier: Apache-2.0
#include "crnn/cli/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "crnn/errors.hpp"
#include "crnn/io/csv.hpp"

namespace crnn::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

template <typename T>
T number(const Settings& s, const std::string& key) {
  const std::string& text = s.at(key);
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size())
    throw DomainError("bad value for " + key + ": '" + text + "'");
  return v;
}

bool boolean(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw DomainError("bad value for " + key + ": '" + v + "' (expected true or false)");
}

}  // namespace

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "train",      "dev",        "test",       "embeddings",   "vocab",       "checkpoint", "out",
      "labels",     "text",       "grid",       "seed",         "embed-dim",   "filter-sizes",
      "num-filters", "hops",      "hidden",     "num-classes",  "ntl",         "dropout",    "lambda",
      "regularize-all", "lr",     "beta1",      "beta2",        "eps",         "batch-size", "epochs",
      "patience",   "threads",    "min-count",  "lowercase",    "folds",       "dev-fraction", "sample"};
  return keys;
}

Settings to_settings(const RunConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"train", c.train_path},
      {"dev", c.dev_path},
      {"test", c.test_path},
      {"embeddings", c.embeddings_path},
      {"vocab", c.vocab_path},
      {"checkpoint", c.checkpoint_path},
      {"out", c.out_dir},
      {"labels", c.labels_path},
      {"text", c.text},
      {"grid", c.grid_path},
      {"seed", std::to_string(c.train.seed)},
      {"embed-dim", std::to_string(c.model.embed_dim)},
      {"filter-sizes", model::format_sizes(c.model.filter_sizes)},
      {"num-filters", std::to_string(c.model.num_filters)},
      {"hops", std::to_string(c.model.hops)},
      {"hidden", std::to_string(c.model.hidden)},
      {"num-classes", std::to_string(c.num_classes)},
      {"ntl", b(c.model.use_ntl)},
      {"dropout", format_double(c.model.dropout_rate)},
      {"lambda", format_double(c.model.lambda)},
      {"regularize-all", b(c.model.regularize_all)},
      {"lr", format_double(c.train.learning_rate)},
      {"beta1", format_double(c.train.beta1)},
      {"beta2", format_double(c.train.beta2)},
      {"eps", format_double(c.train.eps)},
      {"batch-size", std::to_string(c.train.batch_size)},
      {"epochs", std::to_string(c.train.max_epochs)},
      {"patience", std::to_string(c.train.patience)},
      {"threads", std::to_string(c.train.threads)},
      {"min-count", std::to_string(c.min_count)},
      {"lowercase", b(c.lowercase)},
      {"folds", std::to_string(c.folds)},
      {"dev-fraction", format_double(c.dev_fraction)},
      {"sample", std::to_string(c.sample)},
  };
}

RunConfig from_settings(const Settings& given) {
  const Settings s = merge(to_settings(RunConfig{}), given);
  for (const auto& [key, value] : given)
    if (std::find(setting_keys().begin(), setting_keys().end(), key) == setting_keys().end())
      throw DomainError("unknown setting '" + key + "'");

  RunConfig c;
  c.train_path = s.at("train");
  c.dev_path = s.at("dev");
  c.test_path = s.at("test");
  c.embeddings_path = s.at("embeddings");
  c.vocab_path = s.at("vocab");
  c.checkpoint_path = s.at("checkpoint");
  c.out_dir = s.at("out");
  c.labels_path = s.at("labels");
  c.text = s.at("text");
  c.grid_path = s.at("grid");

  c.train.seed = number<std::uint64_t>(s, "seed");
  c.model.embed_dim = number<std::size_t>(s, "embed-dim");
  c.model.filter_sizes = model::parse_sizes(s.at("filter-sizes"));
  c.model.num_filters = number<std::size_t>(s, "num-filters");
  c.model.hops = number<std::size_t>(s, "hops");
  c.model.hidden = number<std::size_t>(s, "hidden");
  c.num_classes = number<std::size_t>(s, "num-classes");
  c.model.use_ntl = boolean(s, "ntl");
  c.model.dropout_rate = number<double>(s, "dropout");
  c.model.lambda = number<double>(s, "lambda");
  c.model.regularize_all = boolean(s, "regularize-all");
  c.train.learning_rate = number<double>(s, "lr");
  c.train.beta1 = number<double>(s, "beta1");
  c.train.beta2 = number<double>(s, "beta2");
  c.train.eps = number<double>(s, "eps");
  c.train.batch_size = number<std::size_t>(s, "batch-size");
  c.train.max_epochs = number<std::size_t>(s, "epochs");
  c.train.patience = number<std::size_t>(s, "patience");
  c.train.threads = number<std::size_t>(s, "threads");
  c.min_count = number<std::size_t>(s, "min-count");
  c.lowercase = boolean(s, "lowercase");
  c.folds = number<std::size_t>(s, "folds");
  c.dev_fraction = number<double>(s, "dev-fraction");
  c.sample = number<std::size_t>(s, "sample");

  if (c.num_classes) c.model.num_classes = c.num_classes;
  c.train.validate();
  if (c.min_count < 1) throw DomainError("min-count must be >= 1");
  if (c.dev_fraction < 0.0 || c.dev_fraction >= 1.0) throw DomainError("dev-fraction must lie in [0, 1)");
  return c;
}

Settings read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read config file " + path.string());
  Settings out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = normalize_key(trim(std::string_view(line).substr(0, eq)));
    if (std::find(setting_keys().begin(), setting_keys().end(), key) == setting_keys().end())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

Settings merge(Settings base, const Settings& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

std::string format_settings(const Settings& settings) {
  std::string out;
  for (const auto& key : setting_keys()) {
    const auto it = settings.find(key);
    out += key + " = " + (it == settings.end() ? std::string{} : it->second) + "\n";
  }
  return out;
}

}  // namespace crnn::cli
