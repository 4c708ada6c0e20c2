// SPDX-License-Identifier: Apache-2.0
//
// Dense kernels with their reverse-mode rules. Every *_backward function
// accumulates (+=) into the gradient buffers it is given, so a parameter
// used at several places (GRU weights across time steps) simply receives
// the sum of its contributions.
#pragma once

#include <cstddef>
#include <span>

#include "crnn/numerics/matrix.hpp"

namespace crnn {

enum class Activation { relu, tanh, sigmoid };

/// a·b. Throws ShapeError naming both shapes when inner dimensions differ.
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

/// out += op(a)·op(b), op = transpose when the matching flag is set.
template <typename T>
void add_matmul(BasicMatrix<T>& out, const BasicMatrix<T>& a, const BasicMatrix<T>& b,
                bool transpose_a = false, bool transpose_b = false);

/// Given g = ∂L/∂(a·b): a_grad += g·bᵀ, b_grad += aᵀ·g. Either target may be null.
template <typename T>
void matmul_backward(const BasicMatrix<T>& a, const BasicMatrix<T>& b, const BasicMatrix<T>& g,
                     BasicMatrix<T>* a_grad, BasicMatrix<T>* b_grad);

template <typename T>
T activate(Activation f, T x);

template <typename T>
BasicMatrix<T> elementwise(Activation f, const BasicMatrix<T>& m);

/// grad_in += grad_out ∘ f′, with f′ expressed through the forward output.
template <typename T>
void elementwise_backward(Activation f, const BasicMatrix<T>& output, const BasicMatrix<T>& grad_out,
                          BasicMatrix<T>& grad_in);

/// Column-wise softmax over rows [0, valid_len); rows at or beyond valid_len are exactly 0.
/// Throws DomainError when valid_len < 1 or valid_len > rows.
template <typename T>
BasicMatrix<T> softmax_columns(const BasicMatrix<T>& m, std::size_t valid_len);

template <typename T>
void softmax_columns_backward(const BasicMatrix<T>& output, const BasicMatrix<T>& grad_out,
                              std::size_t valid_len, BasicMatrix<T>& grad_in);

/// In-place max-shifted softmax of a vector.
template <typename T>
void softmax_inplace(std::span<T> v);

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& m);

/// a += scale·b
template <typename T>
void add_scaled(BasicMatrix<T>& a, const BasicMatrix<T>& b, T scale = T{1});

template <typename T>
BasicMatrix<T> hadamard(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

template <typename T>
T sum_squares(const BasicMatrix<T>& m);

template <typename T>
bool all_finite(const BasicMatrix<T>& m);

}  // namespace crnn
