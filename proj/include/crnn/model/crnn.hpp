// SPDX-License-Identifier: Apache-2.0
//
// Full CRNN forward pass per example, the batch loss and its exact gradient.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crnn/corpus/batching.hpp"
#include "crnn/model/config.hpp"
#include "crnn/model/layers.hpp"
#include "crnn/model/params.hpp"
#include "crnn/numerics/rng.hpp"

namespace crnn::model {

using corpus::TokenId;

enum class Mode { train, eval };

/// Everything one example's forward pass produced. Dropout masks hold the
/// inverted-dropout multipliers (0 or 1/(1−rate)) and are empty in eval mode;
/// the *_used members are the post-dropout tensors fed downstream.
template <typename T>
struct ForwardTrace {
  std::vector<TokenId> token_ids;
  std::size_t valid_len = 0;

  BasicMatrix<T> x;     // n×d
  BasicMatrix<T> c;     // n×l
  BasicMatrix<T> a;     // n×z
  BasicMatrix<T> hf;    // n×m
  BasicMatrix<T> hb;    // n×m
  BasicMatrix<T> hhat;  // n×m, empty without the tensor layer
  BasicMatrix<T> h;     // n×r
  BasicMatrix<T> s;     // z×r
  BasicMatrix<T> logits, probs;  // 1×K

  BasicMatrix<T> c_mask;  // 1×l, whole filters dropped
  BasicMatrix<T> h_mask;  // n×r
  BasicMatrix<T> s_mask;  // z×r
  BasicMatrix<T> c_used, h_used, s_used;

  GruTrace<T> gru_fwd, gru_bwd;

  std::size_t rows() const noexcept { return x.rows(); }
};

/// Runs the model on `ids` (rows beyond `valid_len` are padding). In train
/// mode `dropout` must be non-null when cfg.dropout_rate > 0.
template <typename T>
ForwardTrace<T> forward_example(const CrnnParams<T>& params, const CrnnConfig& cfg, std::span<const TokenId> ids,
                                std::size_t valid_len, Mode mode, Rng* dropout = nullptr);

/// Per-example traces for a batch. Each example's dropout stream is seeded
/// from `rng` in batch order.
template <typename T>
std::vector<ForwardTrace<T>> forward(const corpus::Batch& batch, const CrnnParams<T>& params, const CrnnConfig& cfg,
                                     Mode mode, Rng* rng = nullptr);

/// λ·Σ‖θ‖² over the regularized blocks.
template <typename T>
T regularization(const CrnnParams<T>& params, const CrnnConfig& cfg);

/// Mean cross-entropy over the traces plus one regularization term.
template <typename T>
T batch_loss(std::span<const ForwardTrace<T>> traces, std::span<const int> labels, const CrnnParams<T>& params,
             const CrnnConfig& cfg);

/// Unscaled gradient of one example's cross-entropy: body holds every block
/// but the embedding, grad_x the gradient w.r.t. the example's word vectors.
template <typename T>
struct ExampleGradient {
  CrnnParams<T> body;
  BasicMatrix<T> grad_x;
};

template <typename T>
void backward_example(const ForwardTrace<T>& trace, int label, const CrnnParams<T>& params, const CrnnConfig& cfg,
                      ExampleGradient<T>& out);

/// Exact gradient of batch_loss with respect to every parameter. Dropout
/// masks are replayed from the traces; the pad embedding row stays zero.
template <typename T>
CrnnParams<T> backward(std::span<const ForwardTrace<T>> traces, std::span<const int> labels,
                       const CrnnParams<T>& params, const CrnnConfig& cfg);

/// Forward + backward for a whole batch in one go, optionally spreading
/// examples over `threads` workers. Example gradients are always summed in
/// batch order, so the result does not depend on the thread count.
/// Returns the batch loss; `grads` is overwritten.
template <typename T>
T batch_gradient(const corpus::Batch& batch, const CrnnParams<T>& params, const CrnnConfig& cfg, Mode mode, Rng* rng,
                 CrnnParams<T>& grads, std::size_t threads = 1);

}  // namespace crnn::model
