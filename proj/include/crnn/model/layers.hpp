// SPDX-License-Identifier: Apache-2.0
//
// CRNN building blocks. Sequence inputs are n×d matrices whose first
// `valid_len` rows are real words; rows at or beyond valid_len are padding and
// every layer leaves the corresponding output rows at exactly zero.
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "crnn/model/params.hpp"
#include "crnn/numerics/matrix.hpp"

namespace crnn::model {

/// Zero vectors padded before / after the sequence for a width-k window.
constexpr std::size_t front_padding(std::size_t k) noexcept { return k / 2; }  // ⌈(k−1)/2⌉
constexpr std::size_t back_padding(std::size_t k) noexcept { return (k - 1) / 2; }

// -- convolutional word-importance weights ---------------------------------

/// C (n×l): column j is relu(W_j · X[i−front : i−front+k−1] + b_j) over the
/// zero-padded sequence. Columns follow the bank order (ascending width).
template <typename T>
BasicMatrix<T> conv_feature_map(const BasicMatrix<T>& x, std::span<const FilterBank<T>> filters,
                                std::size_t valid_len);

template <typename T>
void conv_feature_map_backward(const BasicMatrix<T>& x, std::span<const FilterBank<T>> filters,
                               const BasicMatrix<T>& c, const BasicMatrix<T>& grad_c, std::size_t valid_len,
                               std::span<FilterBank<T>> filter_grads, BasicMatrix<T>* grad_x);

/// A = column softmax of C·W over the valid rows.
template <typename T>
BasicMatrix<T> attention_matrix(const BasicMatrix<T>& c, const BasicMatrix<T>& projection, std::size_t valid_len);

// -- recurrent word representations ---------------------------------------

/// Per-step activations of one GRU direction, rows aligned with word positions.
template <typename T>
struct GruTrace {
  BasicMatrix<T> h;          // n×m hidden states
  BasicMatrix<T> update;     // z_t
  BasicMatrix<T> reset;      // r_t
  BasicMatrix<T> candidate;  // h̃_t
  BasicMatrix<T> recurrent;  // U_h·h_{t−1}
};

/// One step: z = σ(W_z x + U_z h), r = σ(W_r x + U_r h),
/// h̃ = tanh(W_h x + r∘U_h h), h' = (1−z)∘h̃ + z∘h.
template <typename T>
std::vector<T> gru_step(std::span<const T> x, std::span<const T> h_prev, const GruParams<T>& p);

/// Runs the recurrence over rows [0, valid_len) from a zero initial state,
/// left to right or (reverse) right to left.
template <typename T>
GruTrace<T> gru_sequence(const BasicMatrix<T>& x, const GruParams<T>& p, std::size_t valid_len, bool reverse);

template <typename T>
void gru_sequence_backward(const BasicMatrix<T>& x, const GruParams<T>& p, const GruTrace<T>& trace,
                           const BasicMatrix<T>& grad_h, std::size_t valid_len, bool reverse, GruParams<T>& grads,
                           BasicMatrix<T>* grad_x);

/// (forward states, backward states), both with zero boundary states.
template <typename T>
std::pair<BasicMatrix<T>, BasicMatrix<T>> bi_gru(const BasicMatrix<T>& x, const GruParams<T>& fwd,
                                                 const GruParams<T>& bwd, std::size_t valid_len);

/// ĥ_i = tanh(hfᵀ·V^i·hb + b_i)
template <typename T>
std::vector<T> neural_tensor_fuse(std::span<const T> hf, std::span<const T> hb, const TensorLayerParams<T>& ntl);

/// Row-wise neural_tensor_fuse over the valid rows.
template <typename T>
BasicMatrix<T> tensor_layer(const BasicMatrix<T>& hf, const BasicMatrix<T>& hb, const TensorLayerParams<T>& ntl,
                            std::size_t valid_len);

template <typename T>
void tensor_layer_backward(const BasicMatrix<T>& hf, const BasicMatrix<T>& hb, const BasicMatrix<T>& hhat,
                           const BasicMatrix<T>& grad_hhat, const TensorLayerParams<T>& ntl, std::size_t valid_len,
                           TensorLayerParams<T>& grads, BasicMatrix<T>& grad_hf, BasicMatrix<T>& grad_hb);

/// H rows [hf ; hb ; ĥ], or [hf ; hb] when `hhat` is null.
template <typename T>
BasicMatrix<T> contextual_reps(const BasicMatrix<T>& hf, const BasicMatrix<T>& hb, const BasicMatrix<T>* hhat);

// -- text representation and classifier -----------------------------------

/// S = Aᵀ·H
template <typename T>
BasicMatrix<T> text_representation(const BasicMatrix<T>& a, const BasicMatrix<T>& h);

/// logits = flatten_rowmajor(S)·W_c + b_c
template <typename T>
BasicMatrix<T> classifier_logits(const BasicMatrix<T>& s, const ClassifierParams<T>& clf);

/// (logits, softmax(logits)), both 1×K.
template <typename T>
std::pair<BasicMatrix<T>, BasicMatrix<T>> classify(const BasicMatrix<T>& s, const ClassifierParams<T>& clf);

inline constexpr double kProbabilityFloor = 1e-12;

/// −log(max(p[label], 1e−12)). Throws DomainError for an out-of-range label.
template <typename T>
T cross_entropy(const BasicMatrix<T>& probs, int label);

}  // namespace crnn::model
