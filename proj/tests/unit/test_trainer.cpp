// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "../support/oracles.hpp"
#include "crnn/errors.hpp"
#include "crnn/io/csv.hpp"
#include "crnn/trainer/search.hpp"

using namespace crnn;
using namespace crnn::trainer;
namespace fs = std::filesystem;

namespace {

model::CrnnConfig tiny_model() {
  model::CrnnConfig c;
  c.embed_dim = 8;
  c.hidden = 6;
  c.filter_sizes = {1, 3};
  c.num_filters = 8;
  c.hops = 2;
  c.num_classes = 2;
  c.dropout_rate = 0.0;
  c.lambda = 1e-4;
  return c;
}

Matrix embedding_for(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(vocab, dim);
  for (std::size_t i = dim; i < m.size(); ++i) m[i] = static_cast<float>(rng.uniform(-0.25, 0.25));
  return m;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "crnn_unit_trainer";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("adam") {
  model::CrnnParams<double> single_value_params(double value) {
    auto cfg = tiny_model();
    auto p = model::CrnnParams<double>::zeros(cfg, 4);
    for (auto& b : p.blocks()) b.value->fill(value);
    return p;
  }

  TEST_CASE("first step moves every entry by the learning rate") {
    auto p = single_value_params(0.5);
    auto g = single_value_params(1.0);
    auto state = AdamState<double>::like(p);
    TrainConfig cfg;
    adam_update(p, g, state, cfg);
    CHECK(state.step == 1);
    const double want = 0.5 - 0.001 * 1.0 / (1.0 + 1e-8);
    for (const auto& b : p.blocks()) {
      const std::size_t start = b.kind == model::BlockKind::embedding ? b.value->cols() : 0;
      for (std::size_t i = 0; i < start; ++i) CHECK((*b.value)[i] == 0.5);  // pad row frozen
      for (std::size_t i = start; i < b.value->size(); ++i) CHECK((*b.value)[i] == doctest::Approx(want).epsilon(1e-15));
    }
  }

  TEST_CASE("zero gradient from a fresh state is a fixed point") {
    auto cfg = tiny_model();
    Rng rng(1);
    auto p = model::CrnnParams<float>::initialize(cfg, embedding_for(5, cfg.embed_dim, 2), rng);
    const auto before = p;
    auto state = AdamState<float>::like(p);
    adam_update(p, p.zeros_like(), state, TrainConfig{});
    const auto a = before.blocks();
    const auto b = std::as_const(p).blocks();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].value == *b[i].value);
  }

  TEST_CASE("bias correction over two steps") {
    // scalar check on one entry: g1 = 1, g2 = -2
    auto p = single_value_params(0.0);
    auto state = AdamState<double>::like(p);
    TrainConfig cfg;
    adam_update(p, single_value_params(1.0), state, cfg);
    adam_update(p, single_value_params(-2.0), state, cfg);
    const double m = 0.9 * 0.1 + 0.1 * -2.0, v = 0.999 * 0.001 + 0.001 * 4.0;
    const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
    const double want = -0.001 / (1.0 + 1e-8) - 0.001 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p.classifier.bias[0] == doctest::Approx(want).epsilon(1e-12));
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.learning_rate = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = TrainConfig{};
    c.beta2 = 1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("hand F1 arithmetic") {
    const auto m = metrics_from_confusion({{1, 1}, {0, 2}});
    CHECK(m.accuracy == doctest::Approx(0.75));
    CHECK(m.precision[0] == doctest::Approx(1.0));
    CHECK(m.recall[0] == doctest::Approx(0.5));
    CHECK(m.f1[0] == doctest::Approx(2.0 / 3.0));
    CHECK(m.precision[1] == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall[1] == doctest::Approx(1.0));
    CHECK(m.f1[1] == doctest::Approx(0.8));
    CHECK(std::abs(m.macro_f1 - 0.7333) <= 1e-4);
    CHECK(m.total == 4);
  }

  TEST_CASE("perfect, diagonal and empty-class cases") {
    const auto perfect = metrics_from_predictions(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 1}, 2);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    const auto diag = metrics_from_confusion({{3, 0, 0}, {0, 3, 0}, {0, 0, 3}});
    CHECK(diag.macro_f1 == doctest::Approx(diag.accuracy));
    const auto absent = metrics_from_confusion({{2, 0, 0}, {1, 1, 0}, {0, 0, 0}});
    CHECK(absent.f1[2] == 0.0);
    CHECK(absent.precision[2] == 0.0);
    CHECK(absent.recall[2] == 0.0);
  }

  TEST_CASE("argmax ties and logit shifts") {
    CHECK(argmax<float>(std::vector<float>{0.2f, 0.4f, 0.4f}) == 1);
    CHECK(argmax<float>(std::vector<float>{1.0f, 1.0f}) == 0);
    const std::vector<double> logits{0.3, 2.5, -1.0}, shifted{100.3, 102.5, 99.0};
    CHECK(argmax<double>(logits) == argmax<double>(shifted));
  }
}

TEST_SUITE("training") {
  TEST_CASE("fits a keyword task and stays deterministic") {
    auto cfg = tiny_model();
    const auto data = oracle::keyword_task(3, 32, 30);
    TrainConfig tc;
    tc.max_epochs = 40;
    tc.learning_rate = 0.01;
    tc.seed = 5;
    const auto emb = embedding_for(30, cfg.embed_dim, 1);
    auto run = [&] { return train(data, {}, tc, cfg, initial_params(cfg, emb, tc.seed)); };
    const auto a = run();
    const auto b = run();
    CHECK(a.history == b.history);
    CHECK(a.history.size() == 40);
    CHECK(a.best_epoch == 40);  // no dev set: last epoch wins
    CHECK(evaluate(a.best, cfg, data).accuracy >= 0.99);
    CHECK(evaluate(a.best, cfg, data) == evaluate(a.best, cfg, data));
  }

  TEST_CASE("patience zero stops right after the first non-improving epoch") {
    auto cfg = tiny_model();
    const auto data = oracle::keyword_task(4, 32, 30);
    const auto dev = oracle::keyword_task(5, 8, 30);
    TrainConfig tc;
    tc.max_epochs = 60;
    tc.patience = 0;
    tc.learning_rate = 0.01;
    const auto res = train(data, dev, tc, cfg, initial_params(cfg, embedding_for(30, cfg.embed_dim, 1), 1));
    REQUIRE(res.history.size() < 60);
    double best = -1;
    for (std::size_t i = 0; i + 1 < res.history.size(); ++i) {
      CHECK(*res.history[i].dev_accuracy > best);
      best = *res.history[i].dev_accuracy;
    }
    CHECK(*res.history.back().dev_accuracy <= best);
    CHECK(res.best_dev_accuracy == best);
    CHECK(res.best_epoch == res.history.size() - 1);
  }

  TEST_CASE("callback can stop training early") {
    auto cfg = tiny_model();
    const auto data = oracle::keyword_task(4, 16, 30);
    TrainConfig tc;
    tc.max_epochs = 20;
    const auto res = train(data, {}, tc, cfg, initial_params(cfg, embedding_for(30, cfg.embed_dim, 1), 1),
                           [](const EpochRecord& r, const model::CrnnParams<float>&) { return r.epoch < 3; });
    CHECK(res.history.size() == 3);
  }

  TEST_CASE("non-finite loss names the batch") {
    auto cfg = tiny_model();
    const auto data = oracle::keyword_task(4, 8, 30);
    auto init = initial_params(cfg, embedding_for(30, cfg.embed_dim, 1), 1);
    init.classifier.weights[0] = std::numeric_limits<float>::quiet_NaN();
    try {
      train(data, {}, TrainConfig{}, cfg, init);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("batch 1") != std::string::npos);
    }
    CHECK_THROWS_AS(train({}, {}, TrainConfig{}, cfg, init), DomainError);
  }

  TEST_CASE("history CSV layout") {
    const std::vector<EpochRecord> h{{1, 0.5, 0.75}, {2, 0.25, std::nullopt}};
    const auto path = scratch("history.csv");
    write_history_csv(path, h);
    CHECK(read_file(path) == "epoch,train_loss,dev_accuracy\n1,0.5,0.75\n2,0.25,\n");
  }
}

TEST_SUITE("search") {
  TEST_CASE("grid cardinality and iteration order") {
    GridSpec g{{{1}, {3}, {1, 2, 3}, {3, 4, 5}}, {5, 15, 20, 25, 30}, {0.0001, 0.002, 0.005}, {30, 150, 300, 450, 600}};
    CHECK(g.size() == 300);
    const auto points = g.expand(model::CrnnConfig{});
    CHECK(points.size() == 300);
    CHECK(points.front().filter_sizes == std::vector<std::size_t>{1});
    CHECK(points.front().num_filters == 30);
    CHECK(points[1].num_filters == 150);
    CHECK(points.back().filter_sizes == std::vector<std::size_t>{3, 4, 5});
    CHECK(points.back().hops == 30);
    CHECK_THROWS_AS(GridSpec{}.expand(model::CrnnConfig{}), DomainError);
  }

  TEST_CASE("grid spec file parsing") {
    const auto path = scratch("grid.conf");
    std::ofstream(path) << "# ranges\nfilter_sizes = 1 | 3 | 1,2,3 | 3,4,5\nhops = 5, 15\nlambda = 0.0001\n"
                           "num_filters = 30, 150, 300\n";
    const auto g = load_grid_spec(path);
    CHECK(g.size() == 4 * 2 * 1 * 3);
    CHECK(g.filter_size_sets[2] == std::vector<std::size_t>{1, 2, 3});
    std::ofstream(scratch("bad_grid.conf")) << "hops = 5, x\n";
    CHECK_THROWS_AS(load_grid_spec(scratch("bad_grid.conf")), FormatError);
    std::ofstream(scratch("partial_grid.conf")) << "hops = 5\n";
    CHECK_THROWS_AS(load_grid_spec(scratch("partial_grid.conf")), FormatError);
  }

  TEST_CASE("singleton grid returns its point and writes one row") {
    auto base = tiny_model();
    const auto data = oracle::keyword_task(6, 16, 30);
    const auto dev = oracle::keyword_task(7, 8, 30);
    TrainConfig tc;
    tc.max_epochs = 2;
    GridSpec g{{{2, 3}}, {3}, {0.001}, {6}};
    const auto res = grid_search(data, dev, g, tc, base, embedding_for(30, base.embed_dim, 1));
    REQUIRE(res.rows.size() == 1);
    CHECK(res.best.filter_sizes == std::vector<std::size_t>{2, 3});
    CHECK(res.best.hops == 3);
    CHECK(res.best.num_filters == 6);
    const auto path = scratch("grid.csv");
    write_grid_csv(path, res.rows);
    const auto text = read_file(path);
    CHECK(text.rfind("filter_sizes,hops,lambda,num_filters,dev_accuracy\n\"2,3\",3,0.001,6,", 0) == 0);
  }

  TEST_CASE("cross-validation on a separable task") {
    auto cfg = tiny_model();
    const auto data = oracle::separable_task(8, 40, 30);
    TrainConfig tc;
    tc.max_epochs = 25;
    tc.learning_rate = 0.01;
    const auto emb = embedding_for(30, cfg.embed_dim, 1);
    const auto a = cross_validate(data, 5, tc, cfg, emb, 0.0);
    const auto b = cross_validate(data, 5, tc, cfg, emb, 0.0);
    CHECK(a.fold_accuracy.size() == 5);
    CHECK(a.fold_accuracy == b.fold_accuracy);
    CHECK(a.mean_accuracy >= 0.95);
    const auto path = scratch("cv.csv");
    write_cv_csv(path, a);
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + 5 + 1);
    CHECK_THROWS_AS(cross_validate(data, 1, tc, cfg, emb), DomainError);
  }

  TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(parse_csv_line("\"3,4,5\",5,x") == std::vector<std::string>{"3,4,5", "5", "x"});
    CHECK(format_double(0.1) == "0.1");
  }
}
