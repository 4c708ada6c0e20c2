// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "../support/oracles.hpp"
#include "crnn/corpus/dataset.hpp"
#include "crnn/corpus/embeddings.hpp"
#include "crnn/corpus/vocabulary.hpp"
#include "crnn/model/checkpoint.hpp"
#include "crnn/model/crnn.hpp"
#include "crnn/model/gradient_check.hpp"
#include "crnn/numerics/ops.hpp"
#include "crnn/trainer/metrics.hpp"
#include "crnn/trainer/search.hpp"
#include "crnn/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace crnn;
using model::CrnnConfig;
using model::CrnnParams;
using model::Mode;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kScratch = fs::temp_directory_path() / "crnn_acceptance";

Matrix random_embedding(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(vocab, dim);
  for (std::size_t i = dim; i < m.size(); ++i) m[i] = static_cast<float>(rng.uniform(-0.25, 0.25));
  return m;
}

CrnnParams<double> random_params(const CrnnConfig& cfg, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  auto p = CrnnParams<double>::initialize(cfg, oracle::random_matrix(vocab, cfg.embed_dim, rng, 0.5), rng);
  for (auto& b : p.blocks())
    if (b.kind == model::BlockKind::bias) oracle::randomize(*b.value, rng, 0.3);
  return p;
}

double train_accuracy(const CrnnParams<float>& p, const CrnnConfig& cfg, std::span<const corpus::Example> data) {
  return trainer::evaluate(p, cfg, data).accuracy;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1
Outcome gradient_oracle() {
  std::string detail;
  bool pass = true;
  for (bool ntl : {true, false}) {
    const auto start = Clock::now();
    const auto tiny = model::tiny_problem(ntl, 11);
    const auto check = model::check_model_gradient(tiny.config, tiny.params, tiny.batch, 1e-4);
    const double secs = seconds_since(start);
    const double err = check.result.max_relative_error;
    pass = pass && err <= 1e-3 && secs < 10.0 && check.block_names.size() > 10;
    detail += fmt::format("{}ntl={} max_rel_err={:.2e} blocks={} time={:.2f}s", detail.empty() ? "" : "; ",
                          ntl ? "on" : "off", err, check.block_names.size(), secs);
  }
  return {pass, detail};
}

// 2
Outcome naive_loop_equivalence() {
  const auto start = Clock::now();
  Rng rng(2024);
  double gru_err = 0, ntl_err = 0, rep_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.below(8), d = 1 + rng.below(10);
    const auto p = oracle::random_gru(m, d, rng);
    std::vector<double> x(d), h(m);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : h) v = rng.uniform(-1, 1);
    const auto got = model::gru_step<double>(x, h, p);
    const auto want = oracle::gru_step(x, h, p);
    for (std::size_t i = 0; i < m; ++i) gru_err = std::max(gru_err, std::abs(got[i] - want[i]));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.below(8);
    model::TensorLayerParams<double> t;
    for (std::size_t i = 0; i < m; ++i) t.slices.push_back(oracle::random_matrix(m, m, rng));
    t.bias = oracle::random_matrix(1, m, rng);
    std::vector<double> hf(m), hb(m);
    for (auto& v : hf) v = rng.uniform(-1, 1);
    for (auto& v : hb) v = rng.uniform(-1, 1);
    const auto got = model::neural_tensor_fuse<double>(hf, hb, t);
    const auto want = oracle::tensor_fuse(hf, hb, t.slices, t.bias);
    for (std::size_t i = 0; i < m; ++i) ntl_err = std::max(ntl_err, std::abs(got[i] - want[i]));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(20), z = 1 + rng.below(6), r = 1 + rng.below(12);
    const auto a = oracle::random_matrix(n, z, rng), h = oracle::random_matrix(n, r, rng);
    const auto got = model::text_representation(a, h);
    const auto want = oracle::transpose_product(a, h);
    for (std::size_t i = 0; i < got.size(); ++i) rep_err = std::max(rep_err, std::abs(got[i] - want[i]));
  }
  const double secs = seconds_since(start);
  const bool pass = gru_err <= 1e-12 && ntl_err <= 1e-12 && rep_err <= 1e-12 && secs < 5.0;
  return {pass, fmt::format("gru={:.1e} ntl={:.1e} AtH={:.1e} time={:.2f}s", gru_err, ntl_err, rep_err, secs)};
}

// 3
Outcome normalization() {
  CrnnConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden = 4;
  cfg.filter_sizes = {1, 2, 3};
  cfg.num_filters = 9;
  cfg.hops = 4;
  cfg.num_classes = 3;
  cfg.dropout_rate = 0.0;
  const std::size_t vocab = 25;
  const auto params = random_params(cfg, vocab, 3);
  Rng rng(303);
  double worst_col = 0, worst_prob = 0;
  bool masked_zero = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t width = 1 + rng.below(20);
    const std::size_t valid = 1 + rng.below(width);
    std::vector<corpus::TokenId> ids(width, corpus::Vocabulary::kPadId);
    for (std::size_t i = 0; i < valid; ++i) ids[i] = static_cast<corpus::TokenId>(1 + rng.below(vocab - 1));
    const auto tr = model::forward_example<double>(params, cfg, ids, valid, Mode::eval);
    for (std::size_t j = 0; j < cfg.hops; ++j) {
      double sum = 0;
      for (std::size_t i = 0; i < tr.a.rows(); ++i) {
        if (i < valid) sum += tr.a(i, j);
        else masked_zero = masked_zero && tr.a(i, j) == 0.0;
      }
      worst_col = std::max(worst_col, std::abs(sum - 1.0));
    }
    double psum = 0;
    for (std::size_t k = 0; k < tr.probs.size(); ++k) psum += tr.probs[k];
    worst_prob = std::max(worst_prob, std::abs(psum - 1.0));
  }
  const bool pass = worst_col <= 1e-6 && worst_prob <= 1e-6 && masked_zero;
  return {pass, fmt::format("max |colsum-1|={:.1e} max |probsum-1|={:.1e} masked rows zero={}", worst_col,
                            worst_prob, masked_zero)};
}

// 4
Outcome shapes_and_ablation() {
  bool pass = true;
  std::size_t cases = 0;
  for (std::size_t n : {1u, 2u, 17u})
    for (std::size_t z : {1u, 5u})
      for (bool ntl : {true, false}) {
        CrnnConfig cfg;
        cfg.embed_dim = 8;
        cfg.hidden = 5;
        cfg.filter_sizes = {1, 3};
        cfg.num_filters = 6;
        cfg.hops = z;
        cfg.use_ntl = ntl;
        cfg.dropout_rate = 0.0;
        const auto params = random_params(cfg, 30, 40 + n + z);
        std::vector<corpus::TokenId> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<corpus::TokenId>(2 + (i * 7) % 28);
        const auto tr = model::forward_example<double>(params, cfg, ids, n, Mode::eval);
        const std::size_t width = (ntl ? 3 : 2) * cfg.hidden;
        bool ok = tr.s.rows() == z && tr.s.cols() == width && tr.a.rows() == n && tr.a.cols() == z &&
                  tr.h.cols() == width && tr.hhat.empty() == !ntl;
        if (z == 1) ok = ok && tr.a == softmax_columns(matmul(tr.c, params.hop_projection), n);
        pass = pass && ok;
        ++cases;
      }
  return {pass, fmt::format("{} configurations checked", cases)};
}

// 5
Outcome overfit() {
  const auto start = Clock::now();
  const CrnnConfig cfg;  // default architecture
  const auto data = oracle::keyword_task(5, 32, 60);
  trainer::TrainConfig tc;
  tc.max_epochs = 200;
  tc.threads = 1;
  double acc = 0;
  std::size_t reached = 0;
  const auto result = trainer::train(data, {}, tc, cfg, trainer::initial_params(cfg, random_embedding(60, 300, 5), 1),
                                     [&](const trainer::EpochRecord& rec, const CrnnParams<float>& p) {
                                       acc = train_accuracy(p, cfg, data);
                                       if (acc >= 0.99) reached = rec.epoch;
                                       return acc < 0.99;
                                     });
  const double secs = seconds_since(start);
  const bool pass = acc >= 0.99 && reached > 0 && reached <= 200 && secs < 120.0;
  return {pass, fmt::format("train accuracy {:.4f} at epoch {} of {} run, time={:.1f}s", acc, reached,
                            result.history.size(), secs)};
}

// 6
Outcome mr_smoke() {
  const fs::path path = CRNN_MR_DATA;
  if (!fs::exists(path)) return {false, fmt::format("dataset {} not found (run tools/fetch_mr.py)", path.string())};
  const auto start = Clock::now();
  const auto texts = corpus::load_dataset(path);
  std::vector<std::size_t> all(texts.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto outer = corpus::holdout(all, 0.1, 7);
  const auto inner = corpus::holdout(outer.train, 0.1, 8);
  const auto train_texts = corpus::gather<corpus::LabeledText>(texts, inner.train);
  const auto vocab = corpus::Vocabulary::build(corpus::token_lists(train_texts), 2);
  Rng rng(9);
  const auto emb = corpus::random_embeddings(vocab, 50, rng);
  const auto train_set = corpus::encode(train_texts, vocab);
  const auto dev_set = corpus::encode(corpus::gather<corpus::LabeledText>(texts, inner.test), vocab);
  const auto test_set = corpus::encode(corpus::gather<corpus::LabeledText>(texts, outer.test), vocab);

  CrnnConfig cfg;
  cfg.embed_dim = 50;
  cfg.hidden = 32;
  cfg.num_filters = 64;
  cfg.hops = 5;
  trainer::TrainConfig tc;
  tc.max_epochs = 10;
  tc.patience = 3;
  tc.threads = 1;
  const auto result = trainer::train(train_set, dev_set, tc, cfg, trainer::initial_params(cfg, emb.vectors, tc.seed));
  const double acc = trainer::evaluate(result.best, cfg, test_set).accuracy;
  const double secs = seconds_since(start);
  const bool pass = acc >= 0.65 && secs < 1800.0;
  return {pass, fmt::format("test accuracy {:.4f} on {} held-out sentences (best epoch {}, {} epochs), time={:.0f}s",
                            acc, test_set.size(), result.best_epoch, result.history.size(), secs)};
}

// 7
Outcome metric_correctness() {
  const auto m = trainer::metrics_from_confusion({{1, 1}, {0, 2}});
  // class 0: P=1, R=1/2, F1=2/3; class 1: P=2/3, R=1, F1=4/5
  const double want_f1 = (2.0 / 3.0 + 0.8) / 2.0;
  const bool pass = std::abs(m.accuracy - 0.75) <= 1e-12 && std::abs(m.macro_f1 - want_f1) <= 1e-12 &&
                    std::abs(m.macro_f1 - 0.7333) <= 1e-4;
  return {pass, fmt::format("accuracy={} macro_f1={:.6f}", m.accuracy, m.macro_f1)};
}

void write_toy_dataset(const fs::path& path, std::size_t count) {
  static const char* pos[] = {"great", "wonderful", "moving", "superb"};
  static const char* neg[] = {"dull", "awful", "tedious", "boring"};
  static const char* filler[] = {"the", "film", "plot", "is", "a", "story", "cast", "really", "quite", "movie"};
  std::ofstream out(path);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    out << label << "\t" << filler[i % 10] << " " << filler[(i * 7 + 3) % 10] << " "
        << (label ? pos[(i / 2) % 4] : neg[(i / 2) % 4]) << " " << filler[(i * 3 + 1) % 10] << " .\n";
  }
}

// 8
Outcome determinism() {
  const auto dir = kScratch / "determinism";
  fs::create_directories(dir);
  write_toy_dataset(dir / "train.tsv", 48);
  write_toy_dataset(dir / "dev.tsv", 12);
  auto run = [&](const std::string& out) {
    const auto cmd = fmt::format(
        "CRNN_LOG=quiet \"{}\" train --train \"{}\" --dev \"{}\" --out \"{}\" --seed 17 --threads 1 --epochs 4 "
        "--embed-dim 16 --hidden 8 --filter-sizes 1,2,3 --num-filters 12 --hops 3 --min-count 1 > /dev/null",
        CRNN_CLI, (dir / "train.tsv").string(), (dir / "dev.tsv").string(), (dir / out).string());
    return std::system(cmd.c_str());
  };
  const int a = run("a"), b = run("b");
  if (a != 0 || b != 0) return {false, fmt::format("cli exit codes {} and {}", a, b)};
  const auto ha = slurp(dir / "a" / "history.csv"), hb = slurp(dir / "b" / "history.csv");
  const auto ca = slurp(dir / "a" / "model.ckpt"), cb = slurp(dir / "b" / "model.ckpt");
  const bool pass = !ha.empty() && !ca.empty() && ha == hb && ca == cb;
  return {pass, fmt::format("history {} bytes identical={}, checkpoint {} bytes identical={}", ha.size(), ha == hb,
                            ca.size(), ca == cb)};
}

// 9
Outcome checkpoint_round_trip() {
  const auto dir = kScratch / "roundtrip";
  fs::create_directories(dir);
  CrnnConfig cfg;
  cfg.embed_dim = 12;
  cfg.hidden = 6;
  cfg.filter_sizes = {2, 3};
  cfg.num_filters = 10;
  cfg.hops = 3;
  const auto data = oracle::keyword_task(21, 40, 40);
  const auto held = oracle::keyword_task(22, 30, 40);
  trainer::TrainConfig tc;
  tc.max_epochs = 5;
  std::vector<std::string> tokens;
  for (int i = 2; i < 40; ++i) tokens.push_back("w" + std::to_string(i));
  const auto vocab = corpus::Vocabulary::from_tokens(tokens);
  auto result = trainer::train(data, {}, tc, cfg, trainer::initial_params(cfg, random_embedding(40, 12, 2), 3));
  const auto in_memory = trainer::evaluate(result.best, cfg, held);
  model::save_checkpoint({cfg, result.best, vocab, true, {}}, dir / "model.ckpt");
  const auto loaded = model::load_checkpoint(dir / "model.ckpt");
  const auto reloaded = trainer::evaluate(loaded, held);
  const bool pass = in_memory == reloaded && loaded.config == cfg;
  return {pass, fmt::format("accuracy {:.4f} / {:.4f}, macro_f1 {:.4f} / {:.4f}, reports identical={}",
                            in_memory.accuracy, reloaded.accuracy, in_memory.macro_f1, reloaded.macro_f1,
                            in_memory == reloaded)};
}

// 10
Outcome grid_plumbing() {
  const auto start = Clock::now();
  const auto grid = trainer::load_grid_spec(CRNN_GRID_SPEC);
  CrnnConfig base;
  base.embed_dim = 4;
  base.hidden = 2;
  base.dropout_rate = 0.0;
  const auto data = oracle::keyword_task(31, 4, 12);
  const auto dev = oracle::keyword_task(32, 2, 12);
  trainer::TrainConfig tc;
  tc.max_epochs = 1;
  tc.batch_size = 4;
  const auto result = trainer::grid_search(data, dev, grid, tc, base, random_embedding(12, 4, 4));
  const auto csv = kScratch / "grid_results.csv";
  trainer::write_grid_csv(csv, result.rows);
  std::ifstream in(csv);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  std::set<std::string> distinct;
  for (const auto& r : result.rows)
    distinct.insert(fmt::format("{}/{}/{}/{}", model::format_sizes(r.config.filter_sizes), r.config.hops,
                                r.config.lambda, r.config.num_filters));
  const bool pass = grid.size() == 300 && result.rows.size() == 300 && distinct.size() == 300 && lines == 301;
  return {pass, fmt::format("{} rows ({} distinct, {} csv lines incl. header), time={:.1f}s", result.rows.size(),
                            distinct.size(), lines, seconds_since(start))};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  fs::remove_all(kScratch);
  fs::create_directories(kScratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient oracle (finite differences, with and without tensor layer)", gradient_oracle},
      {"naive-loop equivalence (GRU step, tensor fusion, A^T H)", naive_loop_equivalence},
      {"normalization (attention columns, masked rows, class probabilities)", normalization},
      {"shape and ablation suite", shapes_and_ablation},
      {"overfit sanity on the 32-example keyword task", overfit},
      {"MR smoke: 90/10 split, d=50 random embeddings, >= 65% test accuracy", mr_smoke},
      {"metric correctness on [[1,1],[0,2]]", metric_correctness},
      {"determinism of two identical CLI training runs", determinism},
      {"checkpoint round trip gives an identical metrics report", checkpoint_round_trip},
      {"grid plumbing: 300 rows from the reference grid", grid_plumbing},
  };

  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::stoul(argv[i])));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const std::size_t id = i + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << fmt::format("{} {:>2} {} -- {}", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail)
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
