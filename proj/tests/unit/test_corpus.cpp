// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "crnn/corpus/batching.hpp"
#include "crnn/corpus/dataset.hpp"
#include "crnn/corpus/embeddings.hpp"
#include "crnn/corpus/tokenizer.hpp"
#include "crnn/corpus/vocabulary.hpp"
#include "crnn/errors.hpp"

using namespace crnn;
using namespace crnn::corpus;
namespace fs = std::filesystem;
using Tokens = std::vector<std::string>;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "crnn_unit_corpus";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const auto p = scratch(name);
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("clitics and punctuation split off") {
    CHECK(tokenize("It's good!") == Tokens{"it", "'s", "good", "!"});
    CHECK(tokenize("") == Tokens{});
    CHECK(tokenize("   \t ") == Tokens{});
    CHECK(tokenize("HELLO", false) == Tokens{"HELLO"});
  }

  TEST_CASE("hyphenated words, ellipses and quotes") {
    CHECK(tokenize("a co-writer's film...") == Tokens{"a", "co-writer", "'s", "film", "..."});
    CHECK(tokenize("\"conan\"") == Tokens{"\"", "conan", "\""});
    CHECK(tokenize("don't") == Tokens{"don", "'t"});
    CHECK(tokenize("-- wait") == Tokens{"--", "wait"});
  }

  TEST_CASE("non-ascii bytes stay inside words") {
    CHECK(tokenize("Café noir") == Tokens{"café", "noir"});
  }
}

TEST_SUITE("vocabulary") {
  TEST_CASE("count threshold") {
    const std::vector<Tokens> corpus{{"a", "a", "b"}};
    const auto v = Vocabulary::build(corpus, 2);
    CHECK(v.size() == 3);
    CHECK(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
    CHECK(v.id("b") == v.unk_id());
    CHECK(v.unk_id() != v.pad_id());
  }

  TEST_CASE("ids by descending count then lexicographic") {
    const std::vector<Tokens> corpus{{"b", "c", "a", "c"}, {"b", "d"}};
    const auto v = Vocabulary::build(corpus, 1);
    CHECK(v.size() == 4 + Vocabulary::kNumSpecials);
    CHECK(v.regular_tokens() == Tokens{"b", "c", "a", "d"});
    CHECK(v.token(v.pad_id()) == "<pad>");
    CHECK(v.token(v.unk_id()) == "<UNK>");
  }

  TEST_CASE("empty corpus keeps only the specials; bad threshold rejected") {
    const auto v = Vocabulary::build(std::vector<Tokens>{}, 1);
    CHECK(v.size() == Vocabulary::kNumSpecials);
    CHECK_THROWS_AS(Vocabulary::build(std::vector<Tokens>{}, 0), DomainError);
  }

  TEST_CASE("round trips through ids and files") {
    const std::vector<Tokens> corpus{{"x", "y", "y", "z", "z", "z"}};
    const auto v = Vocabulary::build(corpus, 1);
    for (const auto& t : v.regular_tokens()) CHECK(v.token(v.id(t)) == t);
    for (auto id : v.encode(Tokens{"x", "nope", "z"})) CHECK(static_cast<std::size_t>(id) < v.size());
    const auto path = scratch("vocab.txt");
    v.save(path);
    const auto w = Vocabulary::load(path);
    CHECK(w.regular_tokens() == v.regular_tokens());
    CHECK(w.id("z") == v.id("z"));
  }

  TEST_CASE("construction is deterministic") {
    const std::vector<Tokens> corpus{{"q", "w", "e", "w"}, {"e", "r"}};
    CHECK(Vocabulary::build(corpus, 1).regular_tokens() == Vocabulary::build(corpus, 1).regular_tokens());
  }
}

TEST_SUITE("embeddings") {
  TEST_CASE("file rows copied, missing rows drawn, pad row zero") {
    const auto vocab = Vocabulary::from_tokens(Tokens{"a", "b"});
    const auto path = write_file("emb.txt", "a 1.0 2.0\nzzz 5 5\n");
    Rng r1(1), r2(1);
    const auto t1 = load_embeddings(path, vocab, 2, r1);
    const auto t2 = load_embeddings(path, vocab, 2, r2);
    CHECK(t1.found == 1);
    const auto a = t1.vectors.row(static_cast<std::size_t>(vocab.id("a")));
    CHECK(a[0] == 1.0f);
    CHECK(a[1] == 2.0f);
    for (float v : t1.vectors.row(static_cast<std::size_t>(vocab.id("b")))) {
      CHECK(v >= -0.25f);
      CHECK(v <= 0.25f);
    }
    for (float v : t1.vectors.row(0)) CHECK(v == 0.0f);
    CHECK(t1.vectors == t2.vectors);
  }

  TEST_CASE("header dimension and malformed lines") {
    const auto vocab = Vocabulary::from_tokens(Tokens{"a"});
    Rng rng(1);
    CHECK(load_embeddings(write_file("h_ok.txt", "1 2\na 0.5 0.25\n"), vocab, 2, rng).found == 1);
    CHECK_THROWS_AS(load_embeddings(write_file("h_bad.txt", "1 3\na 0.5 0.25 1\n"), vocab, 2, rng), FormatError);
    try {
      load_embeddings(write_file("bad.txt", "a 0.5 0.25\nb 0.1 oops\n"), vocab, 2, rng);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_embeddings(write_file("short.txt", "a 0.5\n"), vocab, 2, rng), FormatError);
    CHECK_THROWS_AS(load_embeddings(scratch("missing.txt"), vocab, 2, rng), FileError);
  }

  TEST_CASE("random table keeps the pad row zero") {
    const auto vocab = Vocabulary::from_tokens(Tokens{"a", "b", "c"});
    Rng rng(3);
    const auto t = random_embeddings(vocab, 5, rng);
    CHECK(t.vectors.rows() == vocab.size());
    for (float v : t.vectors.row(0)) CHECK(v == 0.0f);
  }
}

TEST_SUITE("datasets") {
  TEST_CASE("label-tab-text lines") {
    const auto path = write_file("data.tsv", "1\tGreat film!\n0\tdull\n\n1\t   \n");
    LoadStats stats;
    const auto data = load_dataset(path, nullptr, true, &stats);
    REQUIRE(data.size() == 2);
    CHECK(data[0].label == 1);
    CHECK(data[0].tokens == Tokens{"great", "film", "!"});
    CHECK(stats.skipped_empty == 1);
    CHECK(infer_class_count(data) == 2);
  }

  TEST_CASE("named labels through a label map") {
    const auto map_path = write_file("labels.txt", "neg\npos\n");
    const auto labels = LabelMap::load(map_path);
    const auto data = load_dataset(write_file("named.tsv", "pos\tok\nneg\tbad\n"), &labels);
    CHECK(data[0].label == 1);
    CHECK(data[1].label == 0);
    CHECK_THROWS_AS(load_dataset(write_file("named_bad.tsv", "meh\tok\n"), &labels), FormatError);
  }

  TEST_CASE("malformed lines") {
    CHECK_THROWS_AS(load_dataset(write_file("notab.tsv", "1 no tab here\n")), FormatError);
    CHECK_THROWS_AS(load_dataset(write_file("neg.tsv", "-1\tx\n")), FormatError);
    CHECK_THROWS_AS(load_dataset(scratch("absent.tsv")), FileError);
  }

  TEST_CASE("k-fold partitions") {
    const auto ten = kfold(10, 10, 1);
    REQUIRE(ten.size() == 10);
    for (const auto& s : ten) {
      CHECK(s.test.size() == 1);
      CHECK(s.train.size() == 9);
    }

    const auto eleven = kfold(11, 10, 1);
    std::vector<std::size_t> sizes;
    std::multiset<std::size_t> seen;
    for (const auto& s : eleven) {
      sizes.push_back(s.test.size());
      seen.insert(s.test.begin(), s.test.end());
      CHECK(s.train.size() + s.test.size() == 11);
    }
    CHECK(sizes == std::vector<std::size_t>{2, 1, 1, 1, 1, 1, 1, 1, 1, 1});
    CHECK(seen.size() == 11);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 11);

    const auto again = kfold(11, 10, 1);
    for (std::size_t f = 0; f < 10; ++f) CHECK(again[f].test == eleven[f].test);
    CHECK_THROWS_AS(kfold(5, 6, 1), DomainError);
    CHECK_THROWS_AS(kfold(5, 1, 1), DomainError);
  }

  TEST_CASE("holdout split") {
    std::vector<std::size_t> idx(20);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto s = holdout(idx, 0.1, 4);
    CHECK(s.test.size() == 2);
    CHECK(s.train.size() == 18);
    const std::vector<std::size_t> one{7};
    CHECK(holdout(one, 0.5, 1).train.size() == 1);
  }
}

TEST_SUITE("batching") {
  TEST_CASE("partition sizes and padding") {
    std::vector<Example> ex{{{5, 6}, 0}, {{7, 8, 9, 10, 11}, 1}, {{3}, 1}};
    const auto batches = make_batches(ex, 2, Vocabulary::kPadId);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].size() == 2);
    CHECK(batches[1].size() == 1);
    CHECK(batches[0].width == 5);
    const auto row = batches[0].row(0);
    CHECK(std::count(row.begin(), row.end(), Vocabulary::kPadId) == 3);
    CHECK(batches[0].lengths == std::vector<std::size_t>{2, 5});
    CHECK(batches[0].labels == std::vector<int>{0, 1});
  }

  TEST_CASE("seeded shuffle is reproducible") {
    std::vector<Example> ex;
    for (int i = 0; i < 10; ++i) ex.push_back({{i + 2}, i % 2});
    Rng a(5), b(5);
    const auto x = make_batches(ex, 3, 0, &a);
    const auto y = make_batches(ex, 3, 0, &b);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].ids == y[i].ids);
  }
}
