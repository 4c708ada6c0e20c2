// SPDX-License-Identifier: Apache-2.0
#include "crnn/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "crnn/corpus/embeddings.hpp"
#include "crnn/corpus/tokenizer.hpp"
#include "crnn/errors.hpp"
#include "crnn/inspect/attention.hpp"
#include "crnn/io/csv.hpp"
#include "crnn/model/gradient_check.hpp"
#include "crnn/trainer/search.hpp"

namespace crnn::cli {
namespace fs = std::filesystem;
using corpus::LabeledText;

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw DomainError(std::string("missing required --") + flag);
}

fs::path out_path(const RunConfig& cfg, const char* name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

struct Labels {
  std::optional<corpus::LabelMap> map;
  const corpus::LabelMap* get() const { return map ? &*map : nullptr; }
  std::vector<std::string> names() const { return map ? map->names() : std::vector<std::string>{}; }
};

Labels load_labels(const RunConfig& cfg) {
  Labels l;
  if (!cfg.labels_path.empty()) l.map = corpus::LabelMap::load(cfg.labels_path);
  return l;
}

std::vector<LabeledText> load_optional(const std::string& path, const Labels& labels, bool lowercase) {
  if (path.empty()) return {};
  return corpus::load_dataset(path, labels.get(), lowercase);
}

/// Class count from the config, the label map or the data, checked against every split.
std::size_t resolve_classes(const RunConfig& cfg, const Labels& labels,
                            std::initializer_list<const std::vector<LabeledText>*> splits) {
  int seen = 0;
  for (const auto* s : splits) seen = std::max(seen, corpus::infer_class_count(*s));
  std::size_t k = cfg.num_classes;
  if (!k) k = labels.map ? labels.map->size() : static_cast<std::size_t>(seen);
  if (k < 2) throw DomainError("need at least two classes, found " + std::to_string(k));
  if (static_cast<std::size_t>(seen) > k)
    throw DomainError(fmt::format("data has label {} but the model has {} classes", seen - 1, k));
  return k;
}

corpus::Vocabulary vocab_for(const RunConfig& cfg, std::span<const LabeledText> train) {
  if (!cfg.vocab_path.empty()) return corpus::Vocabulary::load(cfg.vocab_path);
  return corpus::Vocabulary::build(corpus::token_lists(train), cfg.min_count);
}

Matrix embeddings_for(const RunConfig& cfg, const corpus::Vocabulary& vocab) {
  Rng rng = Rng(cfg.train.seed).split("embeddings");
  if (cfg.embeddings_path.empty()) return corpus::random_embeddings(vocab, cfg.model.embed_dim, rng).vectors;
  auto table = corpus::load_embeddings(cfg.embeddings_path, vocab, cfg.model.embed_dim, rng);
  spdlog::info("pretrained vectors for {} of {} vocabulary entries", table.found, vocab.size());
  return std::move(table.vectors);
}

model::Checkpoint load_model(const RunConfig& cfg) {
  require(cfg.checkpoint_path, "checkpoint");
  return model::load_checkpoint(cfg.checkpoint_path);
}

std::string label_name(const model::Checkpoint& ckpt, int label) {
  const auto i = static_cast<std::size_t>(label);
  return i < ckpt.label_names.size() ? ckpt.label_names[i] : std::to_string(label);
}

/// Texts from --text, else one per line of --test (a `label\t` prefix is dropped).
std::vector<std::string> input_texts(const RunConfig& cfg) {
  if (!cfg.text.empty()) return {cfg.text};
  require(cfg.test_path, "text or --test");
  std::ifstream in(cfg.test_path);
  if (!in) throw FileError("cannot read " + cfg.test_path);
  std::vector<std::string> texts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto tab = line.find('\t'); tab != std::string::npos) line.erase(0, tab + 1);
    texts.push_back(line);
  }
  return texts;
}

std::vector<corpus::Example> labeled_examples(const model::Checkpoint& ckpt, const std::string& path) {
  const corpus::LabelMap labels(ckpt.label_names);
  const auto data = corpus::load_dataset(path, ckpt.label_names.empty() ? nullptr : &labels, ckpt.lowercase);
  if (data.empty()) throw DomainError("empty dataset: " + path);
  if (static_cast<std::size_t>(corpus::infer_class_count(data)) > ckpt.config.num_classes)
    throw DomainError(fmt::format("label set of {} does not match the checkpoint's {} classes", path,
                                  ckpt.config.num_classes));
  return corpus::encode(data, ckpt.vocab);
}

nlohmann::json metrics_json(const trainer::MetricsReport& m) {
  return {{"total", m.total},         {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1},
          {"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1},
          {"confusion", m.confusion}};
}

}  // namespace

int cmd_build_vocab(const RunConfig& cfg, std::ostream& out) {
  require(cfg.train_path, "train");
  const auto labels = load_labels(cfg);
  const auto data = corpus::load_dataset(cfg.train_path, labels.get(), cfg.lowercase);
  const auto lists = corpus::token_lists(data);
  const auto vocab = corpus::Vocabulary::build(lists, cfg.min_count);
  const fs::path path = cfg.vocab_path.empty() ? out_path(cfg, "vocab.txt") : fs::path(cfg.vocab_path);
  vocab.save(path);

  std::size_t tokens = 0, covered = 0;
  for (const auto& l : lists)
    for (const auto& t : l) {
      ++tokens;
      covered += vocab.contains(t);
    }
  out << fmt::format("vocabulary size {} (min count {}) written to {}\n", vocab.size(), cfg.min_count,
                     path.string());
  out << fmt::format("token coverage {:.4f} ({} of {})\n", tokens ? double(covered) / double(tokens) : 0.0, covered,
                     tokens);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  require(cfg.train_path, "train");
  const auto labels = load_labels(cfg);
  const auto train = corpus::load_dataset(cfg.train_path, labels.get(), cfg.lowercase);
  const auto dev = load_optional(cfg.dev_path, labels, cfg.lowercase);
  const auto test = load_optional(cfg.test_path, labels, cfg.lowercase);
  if (train.empty()) throw DomainError("empty dataset: " + cfg.train_path);

  model::CrnnConfig mc = cfg.model;
  mc.num_classes = resolve_classes(cfg, labels, {&train, &dev, &test});
  mc.validate();

  const auto vocab = vocab_for(cfg, train);
  const auto embedding = embeddings_for(cfg, vocab);
  const auto tr = corpus::encode(train, vocab);
  const auto dv = corpus::encode(dev, vocab);
  spdlog::info("train {} / dev {} examples, vocabulary {}, {} classes", tr.size(), dv.size(), vocab.size(),
               mc.num_classes);

  auto result = trainer::train(tr, dv, cfg.train, mc, trainer::initial_params(mc, embedding, cfg.train.seed));

  const fs::path ckpt_path = cfg.checkpoint_path.empty() ? out_path(cfg, "model.ckpt") : fs::path(cfg.checkpoint_path);
  if (ckpt_path.has_parent_path()) fs::create_directories(ckpt_path.parent_path());
  model::Checkpoint ckpt{mc, std::move(result.best), vocab, cfg.lowercase, labels.names()};
  model::save_checkpoint(ckpt, ckpt_path);
  trainer::write_history_csv(out_path(cfg, "history.csv"), result.history);

  out << fmt::format("trained {} epochs, best epoch {}\n", result.history.size(), result.best_epoch);
  if (!dv.empty()) out << fmt::format("dev accuracy {:.4f}\n", result.best_dev_accuracy);
  if (!test.empty()) {
    const auto m = trainer::evaluate(ckpt, corpus::encode(test, vocab), cfg.train.threads);
    out << fmt::format("test accuracy {:.4f}  macro-F1 {:.4f}\n", m.accuracy, m.macro_f1);
  }
  out << "checkpoint written to " << ckpt_path.string() << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const auto ckpt = load_model(cfg);
  require(cfg.test_path, "test");
  const auto data = labeled_examples(ckpt, cfg.test_path);
  const auto m = trainer::evaluate(ckpt, data, cfg.train.threads);
  const auto path = out_path(cfg, "metrics.json");
  std::ofstream(path) << metrics_json(m).dump(2) << "\n";
  out << fmt::format("accuracy {}\nmacro_f1 {}\n", format_double(m.accuracy), format_double(m.macro_f1));
  out << "report written to " << path.string() << "\n";
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  const auto ckpt = load_model(cfg);
  for (const auto& text : input_texts(cfg)) {
    if (corpus::tokenize(text, ckpt.lowercase).empty()) {
      spdlog::warn("skipping a line with no tokens");
      out << "\n";
      continue;
    }
    const auto r = inspect::attention_report(ckpt, text);
    out << label_name(ckpt, r.predicted) << "\t" << fmt::format("{:.6f}", r.probs[static_cast<std::size_t>(r.predicted)])
        << "\n";
  }
  return kExitOk;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  const auto ckpt = load_model(cfg);
  if (!cfg.text.empty() || !cfg.test_path.empty()) {
    const auto texts = input_texts(cfg);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (corpus::tokenize(texts[i], ckpt.lowercase).empty()) {
        spdlog::warn("line {}: no tokens, skipped", i + 1);
        continue;
      }
      const auto r = inspect::attention_report(ckpt, texts[i]);
      const auto stem = fmt::format("report_{:04}", i + 1);
      inspect::render_heatmap(r, out_path(cfg, (stem + ".html").c_str()), ckpt.label_names);
      inspect::write_report_json(r, out_path(cfg, (stem + ".json").c_str()));
      out << stem << "\t" << label_name(ckpt, r.predicted) << "\n";
    }
  }
  if (!cfg.dev_path.empty()) {
    // important words over a labeled set
    const auto data = labeled_examples(ckpt, cfg.dev_path);
    const auto table = inspect::important_words(ckpt, data);
    CsvWriter csv(out_path(cfg, "important_words.csv"), {"class", "word", "count"});
    Rng rng = Rng(cfg.train.seed).split("sample");
    for (std::size_t c = 0; c < table.per_class.size(); ++c) {
      for (const auto& w : table.per_class[c]) csv.row({label_name(ckpt, int(c)), w.word, std::to_string(w.count)});
      const auto picked = inspect::sample_important_words(table, c, cfg.sample, rng);
      out << label_name(ckpt, int(c)) << ":";
      for (const auto& w : picked) out << " " << w;
      out << "\n";
    }
  }
  if (cfg.text.empty() && cfg.test_path.empty() && cfg.dev_path.empty())
    throw DomainError("inspect needs --text, --test (texts) or --dev (labeled set for important words)");
  return kExitOk;
}

int cmd_grid_search(const RunConfig& cfg, std::ostream& out) {
  require(cfg.train_path, "train");
  require(cfg.grid_path, "grid");
  const auto grid = trainer::load_grid_spec(cfg.grid_path);
  const auto labels = load_labels(cfg);
  const auto train = corpus::load_dataset(cfg.train_path, labels.get(), cfg.lowercase);
  auto dev = load_optional(cfg.dev_path, labels, cfg.lowercase);
  if (train.empty()) throw DomainError("empty dataset: " + cfg.train_path);

  model::CrnnConfig base = cfg.model;
  base.num_classes = resolve_classes(cfg, labels, {&train, &dev});
  for (const auto& mc : grid.expand(base)) mc.validate();

  const auto vocab = vocab_for(cfg, train);
  const auto embedding = embeddings_for(cfg, vocab);
  const auto result =
      trainer::grid_search(corpus::encode(train, vocab), corpus::encode(dev, vocab), grid, cfg.train, base, embedding);
  const auto path = out_path(cfg, "grid_results.csv");
  trainer::write_grid_csv(path, result.rows);
  out << fmt::format("{} grid points written to {}\n", result.rows.size(), path.string());
  out << fmt::format("best: filter_sizes={} hops={} lambda={} num_filters={} dev_accuracy={:.4f}\n",
                     model::format_sizes(result.best.filter_sizes), result.best.hops,
                     format_double(result.best.lambda), result.best.num_filters, result.best_dev_accuracy);
  return kExitOk;
}

int cmd_cv(const RunConfig& cfg, std::ostream& out) {
  require(cfg.train_path, "train");
  const auto labels = load_labels(cfg);
  const auto data = corpus::load_dataset(cfg.train_path, labels.get(), cfg.lowercase);
  if (data.empty()) throw DomainError("empty dataset: " + cfg.train_path);
  model::CrnnConfig mc = cfg.model;
  mc.num_classes = resolve_classes(cfg, labels, {&data});
  mc.validate();
  const auto vocab = vocab_for(cfg, data);
  const auto embedding = embeddings_for(cfg, vocab);
  const auto result =
      trainer::cross_validate(corpus::encode(data, vocab), cfg.folds, cfg.train, mc, embedding, cfg.dev_fraction);
  const auto path = out_path(cfg, "cv_results.csv");
  trainer::write_cv_csv(path, result);
  for (std::size_t i = 0; i < result.fold_accuracy.size(); ++i)
    out << fmt::format("fold {:>2}  accuracy {:.4f}\n", i + 1, result.fold_accuracy[i]);
  out << fmt::format("mean accuracy {:.4f}\n", result.mean_accuracy);
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, double corrupt_gradient) {
  constexpr double kEps = 1e-4, kTolerance = 1e-3;
  const auto problem = model::tiny_problem(cfg.model.use_ntl, cfg.train.seed);
  model::set_gradient_corruption(corrupt_gradient);
  model::ModelGradCheck check;
  try {
    check = model::check_model_gradient(problem.config, problem.params, problem.batch, kEps);
  } catch (...) {
    model::set_gradient_corruption(0.0);
    throw;
  }
  model::set_gradient_corruption(0.0);
  for (std::size_t i = 0; i < check.block_names.size(); ++i)
    out << fmt::format("{:<22} {:.3e}\n", check.block_names[i], check.result.per_slot[i]);
  const double err = check.result.max_relative_error;
  out << fmt::format("max relative error {:.3e} (tensor layer {})\n", err, cfg.model.use_ntl ? "on" : "off");
  if (!std::isfinite(err) || err > kTolerance) {
    out << "gradient check FAILED\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace crnn::cli
