// SPDX-License-Identifier: Apache-2.0
#include "crnn/numerics/ops.hpp"

#include <algorithm>
#include <cmath>

namespace crnn {
namespace {

template <typename T>
void require_same_shape(const BasicMatrix<T>& a, const BasicMatrix<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  BasicMatrix<T> out(a.rows(), b.cols());
  add_matmul(out, a, b);
  return out;
}

template <typename T>
void add_matmul(BasicMatrix<T>& out, const BasicMatrix<T>& a, const BasicMatrix<T>& b, bool transpose_a,
                bool transpose_b) {
  const std::size_t p = transpose_a ? a.cols() : a.rows();
  const std::size_t q = transpose_a ? a.rows() : a.cols();
  const std::size_t qb = transpose_b ? b.cols() : b.rows();
  const std::size_t r = transpose_b ? b.rows() : b.cols();
  if (q != qb)
    throw ShapeError("matmul: inner dimensions differ for " + a.shape_string() + (transpose_a ? "ᵀ" : "") +
                     " and " + b.shape_string() + (transpose_b ? "ᵀ" : ""));
  if (out.rows() != p || out.cols() != r)
    throw ShapeError("matmul: output is " + out.shape_string() + ", expected " + std::to_string(p) + "x" +
                     std::to_string(r));

  if (!transpose_a && !transpose_b) {
    for (std::size_t i = 0; i < p; ++i) {
      T* o = out.row(i).data();
      for (std::size_t k = 0; k < q; ++k) {
        const T s = a(i, k);
        if (s == T{0}) continue;
        const T* br = b.row(k).data();
        for (std::size_t j = 0; j < r; ++j) o[j] += s * br[j];
      }
    }
  } else if (transpose_a && !transpose_b) {
    // out(i,j) += Σ_k a(k,i) b(k,j)
    for (std::size_t k = 0; k < q; ++k) {
      const T* ar = a.row(k).data();
      const T* br = b.row(k).data();
      for (std::size_t i = 0; i < p; ++i) {
        const T s = ar[i];
        if (s == T{0}) continue;
        T* o = out.row(i).data();
        for (std::size_t j = 0; j < r; ++j) o[j] += s * br[j];
      }
    }
  } else if (!transpose_a && transpose_b) {
    for (std::size_t i = 0; i < p; ++i) {
      const T* ar = a.row(i).data();
      T* o = out.row(i).data();
      for (std::size_t j = 0; j < r; ++j) {
        const T* br = b.row(j).data();
        T acc0{0}, acc1{0}, acc2{0}, acc3{0};
        std::size_t k = 0;
        for (; k + 4 <= q; k += 4) {
          acc0 += ar[k] * br[k];
          acc1 += ar[k + 1] * br[k + 1];
          acc2 += ar[k + 2] * br[k + 2];
          acc3 += ar[k + 3] * br[k + 3];
        }
        for (; k < q; ++k) acc0 += ar[k] * br[k];
        o[j] += (acc0 + acc1) + (acc2 + acc3);
      }
    }
  } else {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        T acc{0};
        for (std::size_t k = 0; k < q; ++k) acc += a(k, i) * b(j, k);
        out(i, j) += acc;
      }
  }
}

template <typename T>
void matmul_backward(const BasicMatrix<T>& a, const BasicMatrix<T>& b, const BasicMatrix<T>& g,
                     BasicMatrix<T>* a_grad, BasicMatrix<T>* b_grad) {
  if (a_grad) add_matmul(*a_grad, g, b, false, true);
  if (b_grad) add_matmul(*b_grad, a, g, true, false);
}

template <typename T>
T activate(Activation f, T x) {
  switch (f) {
    case Activation::relu:
      return x > T{0} ? x : T{0};
    case Activation::tanh:
      return std::tanh(x);
    case Activation::sigmoid:
      return x >= T{0} ? T{1} / (T{1} + std::exp(-x)) : std::exp(x) / (T{1} + std::exp(x));
  }
  return x;
}

template <typename T>
BasicMatrix<T> elementwise(Activation f, const BasicMatrix<T>& m) {
  BasicMatrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = activate(f, m[i]);
  return out;
}

template <typename T>
void elementwise_backward(Activation f, const BasicMatrix<T>& output, const BasicMatrix<T>& grad_out,
                          BasicMatrix<T>& grad_in) {
  require_same_shape(output, grad_out, "elementwise_backward");
  require_same_shape(output, grad_in, "elementwise_backward");
  for (std::size_t i = 0; i < output.size(); ++i) {
    const T y = output[i];
    T d{0};
    switch (f) {
      case Activation::relu:
        d = y > T{0} ? T{1} : T{0};
        break;
      case Activation::tanh:
        d = T{1} - y * y;
        break;
      case Activation::sigmoid:
        d = y * (T{1} - y);
        break;
    }
    grad_in[i] += grad_out[i] * d;
  }
}

template <typename T>
BasicMatrix<T> softmax_columns(const BasicMatrix<T>& m, std::size_t valid_len) {
  if (valid_len < 1) throw DomainError("softmax_columns: valid_len must be at least 1");
  if (valid_len > m.rows())
    throw DomainError("softmax_columns: valid_len " + std::to_string(valid_len) + " exceeds " +
                      std::to_string(m.rows()) + " rows");
  BasicMatrix<T> out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    T mx = m(0, c);
    for (std::size_t i = 1; i < valid_len; ++i) mx = std::max(mx, m(i, c));
    T total{0};
    for (std::size_t i = 0; i < valid_len; ++i) {
      out(i, c) = std::exp(m(i, c) - mx);
      total += out(i, c);
    }
    for (std::size_t i = 0; i < valid_len; ++i) out(i, c) /= total;
  }
  return out;
}

template <typename T>
void softmax_columns_backward(const BasicMatrix<T>& output, const BasicMatrix<T>& grad_out,
                              std::size_t valid_len, BasicMatrix<T>& grad_in) {
  require_same_shape(output, grad_out, "softmax_columns_backward");
  require_same_shape(output, grad_in, "softmax_columns_backward");
  for (std::size_t c = 0; c < output.cols(); ++c) {
    T dot{0};
    for (std::size_t i = 0; i < valid_len; ++i) dot += output(i, c) * grad_out(i, c);
    for (std::size_t i = 0; i < valid_len; ++i) grad_in(i, c) += output(i, c) * (grad_out(i, c) - dot);
  }
}

template <typename T>
void softmax_inplace(std::span<T> v) {
  if (v.empty()) return;
  const T mx = *std::max_element(v.begin(), v.end());
  T total{0};
  for (T& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (T& x : v) x /= total;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& m) {
  BasicMatrix<T> out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

template <typename T>
void add_scaled(BasicMatrix<T>& a, const BasicMatrix<T>& b, T scale) {
  require_same_shape(a, b, "add_scaled");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
}

template <typename T>
BasicMatrix<T> hadamard(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_same_shape(a, b, "hadamard");
  BasicMatrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename T>
T sum_squares(const BasicMatrix<T>& m) {
  T s{0};
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * m[i];
  return s;
}

template <typename T>
bool all_finite(const BasicMatrix<T>& m) {
  return std::all_of(m.flat().begin(), m.flat().end(), [](T x) { return std::isfinite(x); });
}

#define CRNN_INSTANTIATE_OPS(T)                                                                              \
  template BasicMatrix<T> matmul(const BasicMatrix<T>&, const BasicMatrix<T>&);                              \
  template void add_matmul(BasicMatrix<T>&, const BasicMatrix<T>&, const BasicMatrix<T>&, bool, bool);       \
  template void matmul_backward(const BasicMatrix<T>&, const BasicMatrix<T>&, const BasicMatrix<T>&,         \
                                BasicMatrix<T>*, BasicMatrix<T>*);                                           \
  template T activate(Activation, T);                                                                        \
  template BasicMatrix<T> elementwise(Activation, const BasicMatrix<T>&);                                    \
  template void elementwise_backward(Activation, const BasicMatrix<T>&, const BasicMatrix<T>&,               \
                                     BasicMatrix<T>&);                                                       \
  template BasicMatrix<T> softmax_columns(const BasicMatrix<T>&, std::size_t);                               \
  template void softmax_columns_backward(const BasicMatrix<T>&, const BasicMatrix<T>&, std::size_t,          \
                                         BasicMatrix<T>&);                                                   \
  template void softmax_inplace(std::span<T>);                                                               \
  template BasicMatrix<T> transpose(const BasicMatrix<T>&);                                                  \
  template void add_scaled(BasicMatrix<T>&, const BasicMatrix<T>&, T);                                       \
  template BasicMatrix<T> hadamard(const BasicMatrix<T>&, const BasicMatrix<T>&);                            \
  template T sum_squares(const BasicMatrix<T>&);                                                             \
  template bool all_finite(const BasicMatrix<T>&);

CRNN_INSTANTIATE_OPS(float)
CRNN_INSTANTIATE_OPS(double)

#undef CRNN_INSTANTIATE_OPS

}  // namespace crnn
