// SPDX-License-Identifier: Apache-2.0
#include "crnn/model/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "crnn/errors.hpp"

namespace crnn::model {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
  void block(std::size_t rows, std::size_t cols, const float* data) {
    i32(static_cast<std::int32_t>(rows));
    i32(static_cast<std::int32_t>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) f32(data[i]);
  }
  void block(const Matrix& m) { block(m.rows(), m.cols(), m.data()); }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void block(const std::string& name, std::size_t rows, std::size_t cols, float* out) {
    const auto r = static_cast<std::int32_t>(u32());
    const auto c = static_cast<std::int32_t>(u32());
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) != rows || static_cast<std::size_t>(c) != cols)
      throw FormatError("checkpoint block " + name + " is " + std::to_string(r) + "x" + std::to_string(c) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    need(rows * cols * 4);
    for (std::size_t i = 0; i < rows * cols; ++i) out[i] = std::bit_cast<float>(u32());
  }
  void block(const std::string& name, Matrix& m) { block(name, m.rows(), m.cols(), m.data()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename U>
U parse_value(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("checkpoint header lacks '" + key + "'");
  const std::string& s = it->second;
  U v{};
  if constexpr (std::is_same_v<U, bool>) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw FormatError("checkpoint header: bad boolean for " + key);
  } else {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw FormatError("checkpoint header: bad value '" + s + "' for " + key);
  }
  return v;
}

// Visits parameter tensors in file order. Filters are addressed one row of
// a bank at a time (each row is one k×d filter).
template <typename Params, typename OnMatrix, typename OnFilter, typename OnBiases>
void visit_layout(Params& p, const CrnnConfig& cfg, OnMatrix on_matrix, OnFilter on_filter, OnBiases on_biases) {
  on_matrix("embedding", p.embedding);
  for (auto& bank : p.filters)
    for (std::size_t j = 0; j < bank.count(); ++j) on_filter(bank, j);
  on_biases();
  on_matrix("hop_projection", p.hop_projection);
  for (auto* g : {&p.gru_fwd, &p.gru_bwd}) {
    on_matrix("gru.w_z", g->w_z);
    on_matrix("gru.w_r", g->w_r);
    on_matrix("gru.w_h", g->w_h);
    on_matrix("gru.u_z", g->u_z);
    on_matrix("gru.u_r", g->u_r);
    on_matrix("gru.u_h", g->u_h);
  }
  if (cfg.use_ntl) {
    for (auto& s : p.ntl.slices) on_matrix("ntl.slice", s);
    on_matrix("ntl.bias", p.ntl.bias);
  }
  on_matrix("classifier.weights", p.classifier.weights);
  on_matrix("classifier.bias", p.classifier.bias);
}

}  // namespace

std::string encode_header(const Checkpoint& ckpt) {
  const auto& c = ckpt.config;
  std::ostringstream h;
  h << "format=crnn-checkpoint\n"
    << "version=" << kCheckpointVersion << '\n'
    << "embed_dim=" << c.embed_dim << '\n'
    << "hidden=" << c.hidden << '\n'
    << "filter_sizes=" << format_sizes(c.filter_sizes) << '\n'
    << "num_filters=" << c.num_filters << '\n'
    << "hops=" << c.hops << '\n'
    << "num_classes=" << c.num_classes << '\n'
    << "use_ntl=" << (c.use_ntl ? "true" : "false") << '\n'
    << "rep_width=" << c.rep_width() << '\n'
    << "dropout=" << fmt_double(c.dropout_rate) << '\n'
    << "lambda=" << fmt_double(c.lambda) << '\n'
    << "regularize_all=" << (c.regularize_all ? "true" : "false") << '\n'
    << "lowercase=" << (ckpt.lowercase ? "true" : "false") << '\n'
    << "vocab_size=" << ckpt.vocab.size() << '\n';
  for (std::size_t i = 0; i < ckpt.label_names.size(); ++i) h << "label." << i << '=' << ckpt.label_names[i] << '\n';
  return h.str();
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  ckpt.config.validate();
  check_shapes(ckpt.params, ckpt.config, ckpt.vocab.size());
  Writer w;
  w.raw(std::string(kCheckpointMagic, 4));
  const auto header = encode_header(ckpt);
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.raw(header);

  const std::size_t d = ckpt.config.embed_dim;
  visit_layout(
      ckpt.params, ckpt.config, [&](const char*, const Matrix& m) { w.block(m); },
      [&](const FilterBank<float>& bank, std::size_t j) { w.block(bank.width, d, bank.weights.row(j).data()); },
      [&] {
        std::vector<float> biases;
        for (const auto& bank : ckpt.params.filters) biases.insert(biases.end(), bank.bias.flat().begin(), bank.bias.flat().end());
        w.block(1, biases.size(), biases.data());
      });

  std::string vocab;
  for (const auto& tok : ckpt.vocab.regular_tokens()) vocab += tok + '\n';
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  w.raw(vocab);
  return std::move(w.bytes);
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.raw(4) != std::string(kCheckpointMagic, 4)) throw FormatError("not a CRNN checkpoint (bad magic)");
  const std::string header = r.raw(r.u32());

  std::map<std::string, std::string> kv;
  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint header line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (parse_value<int>(kv, "version") != kCheckpointVersion) throw FormatError("unsupported checkpoint version");

  Checkpoint ck;
  auto& c = ck.config;
  c.embed_dim = parse_value<std::size_t>(kv, "embed_dim");
  c.hidden = parse_value<std::size_t>(kv, "hidden");
  try {
    c.filter_sizes = parse_sizes(kv.at("filter_sizes"));
  } catch (const std::exception&) {
    throw FormatError("checkpoint header: bad filter_sizes");
  }
  c.num_filters = parse_value<std::size_t>(kv, "num_filters");
  c.hops = parse_value<std::size_t>(kv, "hops");
  c.num_classes = parse_value<std::size_t>(kv, "num_classes");
  c.use_ntl = parse_value<bool>(kv, "use_ntl");
  c.dropout_rate = parse_value<double>(kv, "dropout");
  c.lambda = parse_value<double>(kv, "lambda");
  c.regularize_all = parse_value<bool>(kv, "regularize_all");
  ck.lowercase = parse_value<bool>(kv, "lowercase");
  if (parse_value<std::size_t>(kv, "rep_width") != c.rep_width())
    throw FormatError("checkpoint header: rep_width inconsistent with hidden/use_ntl");
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  for (std::size_t i = 0; kv.contains("label." + std::to_string(i)); ++i)
    ck.label_names.push_back(kv["label." + std::to_string(i)]);

  const auto vocab_size = parse_value<std::size_t>(kv, "vocab_size");
  ck.params = CrnnParams<float>::zeros(c, vocab_size);
  const std::size_t d = c.embed_dim;
  visit_layout(
      ck.params, c, [&](const char* name, Matrix& m) { r.block(name, m); },
      [&](FilterBank<float>& bank, std::size_t j) {
        r.block("filter k=" + std::to_string(bank.width), bank.width, d, bank.weights.row(j).data());
      },
      [&] {
        std::vector<float> biases(c.num_filters);
        r.block("filter biases", 1, c.num_filters, biases.data());
        std::size_t off = 0;
        for (auto& bank : ck.params.filters)
          for (std::size_t j = 0; j < bank.count(); ++j) bank.bias[j] = biases[off++];
      });

  const std::string vocab_text = r.raw(r.u32());
  if (!r.done()) throw FormatError("trailing bytes after checkpoint vocabulary");
  std::vector<std::string> tokens;
  std::istringstream vs(vocab_text);
  while (std::getline(vs, line)) tokens.push_back(line);
  ck.vocab = corpus::Vocabulary::from_tokens(tokens);
  if (ck.vocab.size() != vocab_size) throw FormatError("checkpoint vocabulary size disagrees with header");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace crnn::model
