// SPDX-License-Identifier: Apache-2.0
#include "crnn/trainer/search.hpp"

#include <charconv>
#include <fstream>

#include <spdlog/spdlog.h>

#include "crnn/errors.hpp"
#include "crnn/io/csv.hpp"

namespace crnn::trainer {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(std::string_view(s).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty())
    throw FormatError(where + ": bad number '" + text + "'");
  return v;
}

}  // namespace

void GridSpec::validate() const {
  if (filter_size_sets.empty() || hops.empty() || lambdas.empty() || num_filters.empty())
    throw DomainError("grid spec: every value list must be non-empty");
}

std::vector<CrnnConfig> GridSpec::expand(const CrnnConfig& base) const {
  validate();
  std::vector<CrnnConfig> out;
  out.reserve(size());
  for (const auto& sizes : filter_size_sets)
    for (auto z : hops)
      for (double lambda : lambdas)
        for (auto l : num_filters) {
          CrnnConfig c = base;
          c.filter_sizes = sizes;
          c.hops = z;
          c.lambda = lambda;
          c.num_filters = l;
          out.push_back(std::move(c));
        }
  return out;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read grid spec " + path.string());
  GridSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "filter_sizes") {
      for (const auto& set : split(value, '|')) {
        try {
          spec.filter_size_sets.push_back(model::parse_sizes(set));
        } catch (const DomainError& e) {
          throw FormatError(where + ": " + e.what());
        }
      }
    } else if (key == "hops") {
      for (const auto& v : split(value, ',')) spec.hops.push_back(parse_number<std::size_t>(v, where));
    } else if (key == "lambda") {
      for (const auto& v : split(value, ',')) spec.lambdas.push_back(parse_number<double>(v, where));
    } else if (key == "num_filters") {
      for (const auto& v : split(value, ',')) spec.num_filters.push_back(parse_number<std::size_t>(v, where));
    } else {
      throw FormatError(where + ": unknown key '" + key + "'");
    }
  }
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return spec;
}

CrnnParams<float> initial_params(const CrnnConfig& model_cfg, const Matrix& embedding, std::uint64_t seed) {
  Rng rng = Rng(seed).split("init");
  return CrnnParams<float>::initialize(model_cfg, embedding, rng);
}

GridResult grid_search(std::span<const Example> train_set, std::span<const Example> dev_set, const GridSpec& grid,
                       const TrainConfig& cfg, const CrnnConfig& base, const Matrix& embedding) {
  const auto points = grid.expand(base);
  GridResult result;
  double best = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& mc = points[i];
    mc.validate();
    auto run = train(train_set, dev_set, cfg, mc, initial_params(mc, embedding, cfg.seed));
    const double acc = run.best_dev_accuracy;
    spdlog::info("grid point {}/{}: sizes {} z={} lambda={} l={} -> dev acc {:.4f}", i + 1, points.size(),
                 model::format_sizes(mc.filter_sizes), mc.hops, mc.lambda, mc.num_filters, acc);
    if (acc > best) {
      best = acc;
      result.best = mc;
    }
    result.rows.push_back({mc, acc});
  }
  result.best_dev_accuracy = best;
  return result;
}

void write_grid_csv(const std::filesystem::path& path, std::span<const GridRow> rows) {
  CsvWriter csv(path, {"filter_sizes", "hops", "lambda", "num_filters", "dev_accuracy"});
  for (const auto& r : rows)
    csv.row({model::format_sizes(r.config.filter_sizes), std::to_string(r.config.hops),
             format_double(r.config.lambda), std::to_string(r.config.num_filters), format_double(r.dev_accuracy)});
}

CvResult cross_validate(std::span<const Example> data, std::size_t k, const TrainConfig& cfg,
                        const CrnnConfig& model_cfg, const Matrix& embedding, double dev_fraction) {
  if (k < 2) throw DomainError("cross_validate: k must be >= 2");
  if (dev_fraction < 0.0 || dev_fraction >= 1.0) throw DomainError("cross_validate: dev fraction must be in [0, 1)");
  const auto folds = corpus::kfold(data.size(), k, Rng(cfg.seed).split("folds").next_u64());
  CvResult result;
  double sum = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_idx = folds[f].train, dev_idx;
    if (dev_fraction > 0.0) {
      auto carve = corpus::holdout(train_idx, dev_fraction, Rng(cfg.seed).split("dev").next_u64() + f);
      train_idx = std::move(carve.train);
      dev_idx = std::move(carve.test);
    }
    const auto tr = corpus::gather(data, train_idx);
    const auto dv = corpus::gather(data, dev_idx);
    const auto te = corpus::gather(data, std::span<const std::size_t>(folds[f].test));
    auto run = train(tr, dv, cfg, model_cfg, initial_params(model_cfg, embedding, cfg.seed));
    const double acc = evaluate(run.best, model_cfg, te, cfg.threads).accuracy;
    spdlog::info("fold {}/{}: test accuracy {:.4f}", f + 1, k, acc);
    result.fold_accuracy.push_back(acc);
    sum += acc;
  }
  result.mean_accuracy = sum / static_cast<double>(k);
  return result;
}

void write_cv_csv(const std::filesystem::path& path, const CvResult& result) {
  CsvWriter csv(path, {"fold", "accuracy"});
  for (std::size_t i = 0; i < result.fold_accuracy.size(); ++i)
    csv.row({std::to_string(i + 1), format_double(result.fold_accuracy[i])});
  csv.row({"mean", format_double(result.mean_accuracy)});
}

}  // namespace crnn::trainer
