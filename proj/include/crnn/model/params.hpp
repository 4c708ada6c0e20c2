// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "crnn/model/config.hpp"
#include "crnn/numerics/matrix.hpp"
#include "crnn/numerics/rng.hpp"

namespace crnn::model {

/// All filters of one window width. Row j of `weights` is filter j's k×d
/// matrix flattened row-major (word offset major, embedding dim minor).
template <typename T>
struct FilterBank {
  std::size_t width = 0;
  BasicMatrix<T> weights;  // count × (width·d)
  BasicMatrix<T> bias;     // 1 × count

  std::size_t count() const noexcept { return weights.rows(); }
};

template <typename T>
struct GruParams {
  BasicMatrix<T> w_z, w_r, w_h;  // m×d
  BasicMatrix<T> u_z, u_r, u_h;  // m×m
};

template <typename T>
struct TensorLayerParams {
  std::vector<BasicMatrix<T>> slices;  // m slices of m×m
  BasicMatrix<T> bias;                 // 1×m, one scalar per slice
};

template <typename T>
struct ClassifierParams {
  BasicMatrix<T> weights;  // (z·r)×K
  BasicMatrix<T> bias;     // 1×K
};

enum class BlockKind { embedding, weight, bias };

template <typename M>
struct BlockRef {
  std::string name;
  M* value;
  BlockKind kind;
};

/// Every trainable tensor of the model. The same type carries gradients and
/// optimizer moments.
template <typename T>
struct CrnnParams {
  BasicMatrix<T> embedding;              // |V|×d
  std::vector<FilterBank<T>> filters;    // ascending width
  BasicMatrix<T> hop_projection;         // l×z, no bias
  GruParams<T> gru_fwd, gru_bwd;
  TensorLayerParams<T> ntl;              // empty when the tensor layer is off
  ClassifierParams<T> classifier;

  /// Zero tensors with every shape implied by the config.
  static CrnnParams zeros(const CrnnConfig& cfg, std::size_t vocab_size);

  /// Glorot-uniform weights and tensor slices, zero biases, given embeddings.
  static CrnnParams initialize(const CrnnConfig& cfg, BasicMatrix<T> embedding, Rng& rng);

  /// Fixed traversal order: embedding, filter banks (weights then bias per
  /// width), projection, gru_fwd, gru_bwd, tensor slices, tensor bias,
  /// classifier weights, classifier bias.
  std::vector<BlockRef<BasicMatrix<T>>> blocks();
  std::vector<BlockRef<const BasicMatrix<T>>> blocks() const;

  CrnnParams zeros_like() const;
  void set_zero();

  template <typename U>
  CrnnParams<U> cast() const {
    CrnnParams<U> out;
    out.embedding = embedding.template cast<U>();
    for (const auto& f : filters)
      out.filters.push_back({f.width, f.weights.template cast<U>(), f.bias.template cast<U>()});
    out.hop_projection = hop_projection.template cast<U>();
    auto gru = [](const GruParams<T>& g) {
      return GruParams<U>{g.w_z.template cast<U>(), g.w_r.template cast<U>(), g.w_h.template cast<U>(),
                          g.u_z.template cast<U>(), g.u_r.template cast<U>(), g.u_h.template cast<U>()};
    };
    out.gru_fwd = gru(gru_fwd);
    out.gru_bwd = gru(gru_bwd);
    for (const auto& s : ntl.slices) out.ntl.slices.push_back(s.template cast<U>());
    out.ntl.bias = ntl.bias.template cast<U>();
    out.classifier = {classifier.weights.template cast<U>(), classifier.bias.template cast<U>()};
    return out;
  }
};

/// Whether L2 applies to a block of this kind under `cfg`.
bool is_regularized(BlockKind kind, const CrnnConfig& cfg) noexcept;

/// Throws ShapeError when any block disagrees with the config.
template <typename T>
void check_shapes(const CrnnParams<T>& params, const CrnnConfig& cfg, std::size_t vocab_size);

}  // namespace crnn::model
