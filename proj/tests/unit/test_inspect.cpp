// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "crnn/errors.hpp"
#include "crnn/inspect/attention.hpp"
#include "crnn/model/crnn.hpp"

using namespace crnn;
using namespace crnn::inspect;
namespace fs = std::filesystem;

namespace {

model::Checkpoint make_checkpoint(std::size_t hops = 3) {
  model::Checkpoint c;
  c.config.embed_dim = 6;
  c.config.hidden = 4;
  c.config.filter_sizes = {1, 2};
  c.config.num_filters = 6;
  c.config.hops = hops;
  c.config.num_classes = 2;
  c.vocab = corpus::Vocabulary::from_tokens(
      std::vector<std::string>{"the", "film", "is", "great", "dull", "a", "&"});
  Rng rng(17);
  Matrix emb(c.vocab.size(), c.config.embed_dim);
  for (std::size_t i = c.config.embed_dim; i < emb.size(); ++i) emb[i] = static_cast<float>(rng.uniform(-1, 1));
  c.params = model::CrnnParams<float>::initialize(c.config, emb, rng);
  c.label_names = {"negative", "positive"};
  return c;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

/// Tag balance check: every opened element is closed in order (void
/// elements and the doctype excepted).
bool well_formed(const std::string& html) {
  static const std::regex tag(R"(<(/?)([a-zA-Z][a-zA-Z0-9]*)[^>]*?(/?)>)");
  std::vector<std::string> stack;
  for (std::sregex_iterator it(html.begin(), html.end(), tag), end; it != end; ++it) {
    const auto& m = *it;
    const std::string name = m[2];
    if (m[3] == "/" || name == "meta") continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty() && html.rfind("<!DOCTYPE html>", 0) == 0;
}

}  // namespace

TEST_SUITE("attention reports") {
  TEST_CASE("rows align with tokens and columns are distributions") {
    const auto ckpt = make_checkpoint();
    const auto r = attention_report(ckpt, "The film is great !");
    REQUIRE(r.tokens.size() == 5);
    CHECK(r.weights.rows() == 5);
    CHECK(r.weights.cols() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
      double sum = 0;
      for (std::size_t i = 0; i < 5; ++i) {
        CHECK(r.weights(i, j) >= 0.0f);
        sum += r.weights(i, j);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
    CHECK(r.unknown(4));  // "!" is not in the vocabulary
    CHECK(r.probs.size() == 2);
  }

  TEST_CASE("single token gives unit weights; empty text is rejected") {
    const auto ckpt = make_checkpoint();
    const auto r = attention_report(ckpt, "great");
    CHECK(r.weights == Matrix{{1.0f, 1.0f, 1.0f}});
    CHECK_THROWS_AS(attention_report(ckpt, "   "), DomainError);
  }

  TEST_CASE("weights equal the model's A bit for bit and repeat exactly") {
    const auto ckpt = make_checkpoint();
    const auto r1 = attention_report(ckpt, "a dull film");
    const auto r2 = attention_report(ckpt, "a dull film");
    CHECK(r1.weights == r2.weights);
    const auto tr =
        model::forward_example<float>(ckpt.params, ckpt.config, r1.ids, r1.ids.size(), model::Mode::eval);
    CHECK(r1.weights == tr.a);
  }
}

TEST_SUITE("important words") {
  TEST_CASE("argmax extraction and tie rule") {
    Matrix peaked(8, 2);
    peaked(3, 0) = 1.0f;
    peaked(7, 1) = 1.0f;
    CHECK(hop_argmax(peaked, 8) == std::vector<std::size_t>{3, 7});
    CHECK(hop_argmax(Matrix(4, 3, 0.25f), 4) == std::vector<std::size_t>{0, 0, 0});
    CHECK(hop_argmax(peaked, 5) == std::vector<std::size_t>{3, 0});
  }

  TEST_CASE("counts per class and order invariance") {
    const auto ckpt = make_checkpoint(5);
    const auto& v = ckpt.vocab;
    std::vector<corpus::Example> data{{{v.id("the"), v.id("film"), v.id("is"), v.id("great")}, 1},
                                      {{v.id("a"), v.id("dull"), v.id("film")}, 0},
                                      {{v.id("great")}, 1}};
    const auto one = important_words(ckpt, std::span(data).first(1));
    CHECK(one.total(1) == 5);
    CHECK(one.total(0) == 0);

    const auto table = important_words(ckpt, data);
    CHECK(table.total(0) == 5);
    CHECK(table.total(1) == 10);
    for (const auto& cls : table.per_class)
      for (std::size_t i = 0; i < cls.size(); ++i) {
        CHECK(cls[i].count > 0);
        CHECK(v.contains(cls[i].word));
        if (i) CHECK(cls[i - 1].count >= cls[i].count);
      }

    auto reversed = data;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(important_words(ckpt, reversed).per_class == table.per_class);

    const auto only_neg = important_words(ckpt, data, 0);
    CHECK(only_neg.total(1) == 0);
    CHECK(only_neg.total(0) == 5);
  }

  TEST_CASE("seeded sampling") {
    ImportantWordTable t;
    t.per_class = {{{"a", 3}, {"b", 2}, {"c", 1}, {"d", 1}}};
    Rng r1(4), r2(4);
    const auto s1 = sample_important_words(t, 0, 2, r1);
    CHECK(s1.size() == 2);
    CHECK(s1 == sample_important_words(t, 0, 2, r2));
    Rng r3(4);
    CHECK(sample_important_words(t, 0, 10, r3).size() == 4);
  }
}

TEST_SUITE("heatmaps") {
  TEST_CASE("per-hop max rescaling") {
    const auto i = heatmap_intensities(Matrix{{0.1f}, {0.2f}});
    CHECK(i[0][0] == doctest::Approx(50.0));
    CHECK(i[0][1] == doctest::Approx(100.0));
    const auto flat = heatmap_intensities(Matrix(3, 2, 1.0f / 3.0f));
    for (const auto& hop : flat)
      for (double v : hop) CHECK(v == doctest::Approx(100.0));
  }

  TEST_CASE("rescaling preserves order within a hop") {
    Rng rng(3);
    Matrix w(9, 2);
    for (auto& v : w.flat()) v = static_cast<float>(rng.uniform01());
    const auto in = heatmap_intensities(w);
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t a = 0; a < 9; ++a)
        for (std::size_t b = 0; b < 9; ++b)
          if (w(a, j) < w(b, j)) CHECK(in[j][a] < in[j][b]);
  }

  TEST_CASE("html is well formed, escaped and lists every token once per hop") {
    const auto ckpt = make_checkpoint(4);
    const auto r = attention_report(ckpt, "the <b> film & zzz");
    const auto html = render_heatmap_html(r, ckpt.label_names);
    CHECK(well_formed(html));
    CHECK(html.find("<b> ") == std::string::npos);
    CHECK(count_of(html, ">&lt;</span>") == 4);  // "<b>" tokenizes to "<", "b", ">"
    CHECK(count_of(html, ">&gt;</span>") == 4);
    CHECK(count_of(html, ">&amp;</span>") == 4);
    CHECK(count_of(html, ">film</span>") == 4);
    CHECK(count_of(html, ">zzz</span>") == 4);
    CHECK(count_of(html, "class=\"hop\"") == 4);
    CHECK(count_of(html, "class=\"tok unk\"") == 4 * 4);  // <, b, > and zzz are unknown
    CHECK(html.find("http") == std::string::npos);
    CHECK(html_escape("a<\"'&>") == "a&lt;&quot;&#39;&amp;&gt;");
  }

  TEST_CASE("json sidecar and files") {
    const auto ckpt = make_checkpoint(2);
    const auto r = attention_report(ckpt, "great film");
    const auto j = report_json(r);
    CHECK(j["tokens"] == nlohmann::json({"great", "film"}));
    CHECK(j["weights"].size() == 2);
    CHECK(j["weights"][0].size() == 2);
    CHECK(j["predicted"] == r.predicted);
    CHECK(j["probs"].size() == 2);

    const auto dir = fs::temp_directory_path() / "crnn_unit_inspect";
    fs::create_directories(dir);
    render_heatmap(r, dir / "r.html");
    write_report_json(r, dir / "r.json");
    std::ifstream in(dir / "r.json");
    const auto parsed = nlohmann::json::parse(in);
    CHECK(parsed == j);
    CHECK_THROWS_AS(render_heatmap(r, dir / "missing_dir" / "r.html"), FileError);
  }
}
