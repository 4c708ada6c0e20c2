// SPDX-License-Identifier: Apache-2.0
#include "crnn/model/params.hpp"

#include <cmath>

#include "crnn/errors.hpp"

namespace crnn::model {
namespace {

template <typename T>
void glorot(BasicMatrix<T>& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (auto& v : m.flat()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T, typename Self, typename Ref>
std::vector<Ref> collect(Self& p) {
  std::vector<Ref> out;
  out.push_back({"embedding", &p.embedding, BlockKind::embedding});
  for (auto& f : p.filters) {
    const auto w = std::to_string(f.width);
    out.push_back({"filters.k" + w + ".weights", &f.weights, BlockKind::weight});
    out.push_back({"filters.k" + w + ".bias", &f.bias, BlockKind::bias});
  }
  out.push_back({"hop_projection", &p.hop_projection, BlockKind::weight});
  for (auto [prefix, g] : {std::pair{"gru_fwd", &p.gru_fwd}, std::pair{"gru_bwd", &p.gru_bwd}}) {
    const std::string pre = prefix;
    out.push_back({pre + ".w_z", &g->w_z, BlockKind::weight});
    out.push_back({pre + ".w_r", &g->w_r, BlockKind::weight});
    out.push_back({pre + ".w_h", &g->w_h, BlockKind::weight});
    out.push_back({pre + ".u_z", &g->u_z, BlockKind::weight});
    out.push_back({pre + ".u_r", &g->u_r, BlockKind::weight});
    out.push_back({pre + ".u_h", &g->u_h, BlockKind::weight});
  }
  for (std::size_t i = 0; i < p.ntl.slices.size(); ++i)
    out.push_back({"ntl.slice" + std::to_string(i), &p.ntl.slices[i], BlockKind::weight});
  if (!p.ntl.slices.empty()) out.push_back({"ntl.bias", &p.ntl.bias, BlockKind::bias});
  out.push_back({"classifier.weights", &p.classifier.weights, BlockKind::weight});
  out.push_back({"classifier.bias", &p.classifier.bias, BlockKind::bias});
  return out;
}

}  // namespace

bool is_regularized(BlockKind kind, const CrnnConfig& cfg) noexcept {
  return kind == BlockKind::weight || cfg.regularize_all;
}

template <typename T>
CrnnParams<T> CrnnParams<T>::zeros(const CrnnConfig& cfg, std::size_t vocab_size) {
  cfg.validate();
  const std::size_t d = cfg.embed_dim, m = cfg.hidden;
  CrnnParams p;
  p.embedding = BasicMatrix<T>(vocab_size, d);
  const auto counts = cfg.filters_per_size();
  for (std::size_t i = 0; i < counts.size(); ++i)
    p.filters.push_back({cfg.filter_sizes[i], BasicMatrix<T>(counts[i], cfg.filter_sizes[i] * d),
                         BasicMatrix<T>(1, counts[i])});
  p.hop_projection = BasicMatrix<T>(cfg.num_filters, cfg.hops);
  for (auto* g : {&p.gru_fwd, &p.gru_bwd}) {
    g->w_z = g->w_r = g->w_h = BasicMatrix<T>(m, d);
    g->u_z = g->u_r = g->u_h = BasicMatrix<T>(m, m);
  }
  if (cfg.use_ntl) {
    p.ntl.slices.assign(m, BasicMatrix<T>(m, m));
    p.ntl.bias = BasicMatrix<T>(1, m);
  }
  p.classifier.weights = BasicMatrix<T>(cfg.hops * cfg.rep_width(), cfg.num_classes);
  p.classifier.bias = BasicMatrix<T>(1, cfg.num_classes);
  return p;
}

template <typename T>
CrnnParams<T> CrnnParams<T>::initialize(const CrnnConfig& cfg, BasicMatrix<T> embedding, Rng& rng) {
  if (embedding.cols() != cfg.embed_dim)
    throw ShapeError("embedding table has dimension " + std::to_string(embedding.cols()) + ", config says " +
                     std::to_string(cfg.embed_dim));
  CrnnParams p = zeros(cfg, embedding.rows());
  p.embedding = std::move(embedding);
  for (auto& b : p.blocks())
    if (b.kind == BlockKind::weight) glorot(*b.value, rng);
  return p;
}

template <typename T>
std::vector<BlockRef<BasicMatrix<T>>> CrnnParams<T>::blocks() {
  return collect<T, CrnnParams<T>, BlockRef<BasicMatrix<T>>>(*this);
}

template <typename T>
std::vector<BlockRef<const BasicMatrix<T>>> CrnnParams<T>::blocks() const {
  return collect<T, const CrnnParams<T>, BlockRef<const BasicMatrix<T>>>(*this);
}

template <typename T>
CrnnParams<T> CrnnParams<T>::zeros_like() const {
  CrnnParams out = *this;
  out.set_zero();
  return out;
}

template <typename T>
void CrnnParams<T>::set_zero() {
  for (auto& b : blocks()) b.value->set_zero();
}

template <typename T>
void check_shapes(const CrnnParams<T>& params, const CrnnConfig& cfg, std::size_t vocab_size) {
  const auto expected = CrnnParams<T>::zeros(cfg, vocab_size);
  const auto want = expected.blocks();
  const auto have = params.blocks();
  if (want.size() != have.size())
    throw ShapeError("parameter set has " + std::to_string(have.size()) + " blocks, config implies " +
                     std::to_string(want.size()));
  for (std::size_t i = 0; i < want.size(); ++i)
    if (!want[i].value->same_shape(*have[i].value) || want[i].name != have[i].name)
      throw ShapeError("block " + have[i].name + " is " + have[i].value->shape_string() + ", expected " +
                       want[i].name + " " + want[i].value->shape_string());
}

template struct CrnnParams<float>;
template struct CrnnParams<double>;
template void check_shapes(const CrnnParams<float>&, const CrnnConfig&, std::size_t);
template void check_shapes(const CrnnParams<double>&, const CrnnConfig&, std::size_t);

}  // namespace crnn::model
