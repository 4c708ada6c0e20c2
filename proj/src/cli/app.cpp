// SPDX-License-Identifier: Apache-2.0
#include "crnn/cli/app.hpp"

#include <cstdlib>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "crnn/cli/commands.hpp"
#include "crnn/errors.hpp"

namespace crnn::cli {

void configure_logging() {
  auto logger = spdlog::get("crnn");
  if (!logger) logger = spdlog::stderr_color_mt("crnn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("CRNN_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet")
    spdlog::set_level(spdlog::level::warn);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("CRNN_LOG='{}' not recognised, using info", level);
  }
}

namespace {

struct FlagSpec {
  const char* key;
  const char* help;
};

// Value-taking flags, one per setting key.
constexpr FlagSpec kFlags[] = {
    {"train", "training dataset (label<TAB>text per line)"},
    {"dev", "development dataset (model selection; labeled set for inspect)"},
    {"test", "test dataset, or texts for predict/inspect"},
    {"embeddings", "pretrained word vectors (word2vec text format)"},
    {"vocab", "vocabulary file to read (or write, for build-vocab)"},
    {"checkpoint", "model checkpoint path"},
    {"out", "output directory"},
    {"labels", "label names, one per line (line index = class id)"},
    {"text", "a single input text"},
    {"grid", "grid spec file for grid-search"},
    {"seed", "root random seed"},
    {"embed-dim", "word vector width"},
    {"filter-sizes", "comma-separated window widths"},
    {"num-filters", "total filter count"},
    {"hops", "attention hops"},
    {"hidden", "GRU hidden width"},
    {"num-classes", "class count (0 infers it from the data)"},
    {"ntl", "use the tensor layer (true/false)"},
    {"dropout", "dropout rate"},
    {"lambda", "L2 weight"},
    {"regularize-all", "also regularize biases and embeddings (true/false)"},
    {"lr", "Adam learning rate"},
    {"beta1", "Adam beta1"},
    {"beta2", "Adam beta2"},
    {"eps", "Adam epsilon"},
    {"batch-size", "mini-batch size"},
    {"epochs", "maximum epochs"},
    {"patience", "epochs without dev improvement before stopping"},
    {"threads", "worker threads per batch"},
    {"min-count", "vocabulary frequency cutoff"},
    {"lowercase", "lowercase input text (true/false)"},
    {"folds", "cross-validation folds"},
    {"dev-fraction", "dev share carved from each CV training portion"},
    {"sample", "important words sampled per class"},
};

using Command = int (*)(const RunConfig&, std::ostream&);

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"CRNN text classifier: train, evaluate and inspect attention-based models", "crnn"};
  app.require_subcommand(1);
  app.fallthrough();

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  bool no_ntl = false, print_config = false;
  double corrupt = 0.0;

  app.add_option("--config", config_path, "config file of key = value lines");
  for (const auto& f : kFlags) options[f.key] = app.add_option(std::string("--") + f.key, values[f.key], f.help);
  auto* no_ntl_flag = app.add_flag("--no-ntl", no_ntl, "disable the tensor layer");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");

  const std::map<std::string, Command> commands = {
      {"build-vocab", cmd_build_vocab}, {"train", cmd_train}, {"eval", cmd_eval},
      {"predict", cmd_predict},         {"inspect", cmd_inspect}, {"grid-search", cmd_grid_search},
      {"cv", cmd_cv},
  };
  const std::map<std::string, std::string> about = {
      {"build-vocab", "build a vocabulary file from a dataset"},
      {"train", "train a model and write checkpoint + history"},
      {"eval", "evaluate a checkpoint on a labeled dataset"},
      {"predict", "predict labels for raw texts"},
      {"inspect", "attention heatmaps and important words"},
      {"grid-search", "train one model per grid point"},
      {"cv", "k-fold cross-validation"},
      {"gradcheck", "finite-difference gradient check on a tiny model"},
  };
  for (const auto& [name, text] : about) app.add_subcommand(name, text);
  app.get_subcommand("gradcheck")->add_option("--corrupt-gradient", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  configure_logging();
  try {
    Settings settings;
    if (!config_path.empty()) settings = read_config_file(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) settings[key] = values[key];
    if (no_ntl_flag->count() > 0) settings["ntl"] = "false";
    const RunConfig cfg = from_settings(settings);

    if (print_config) {
      std::cout << format_settings(to_settings(cfg));
      return kExitOk;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gradcheck") return cmd_gradcheck(cfg, std::cout, corrupt);
    return commands.at(name)(cfg, std::cout);
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace crnn::cli
