// SPDX-License-Identifier: Apache-2.0
#include "crnn/model/layers.hpp"

#include <algorithm>
#include <cmath>

#include "crnn/errors.hpp"
#include "crnn/numerics/ops.hpp"

namespace crnn::model {
namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc{0};
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T sigmoid(T x) {
  return activate(Activation::sigmoid, x);
}

// out += Uᵀ·v
template <typename T>
void add_transposed_matvec(const BasicMatrix<T>& u, const T* v, T* out) {
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const T s = v[i];
    if (s == T{0}) continue;
    const T* row = u.row(i).data();
    for (std::size_t j = 0; j < u.cols(); ++j) out[j] += s * row[j];
  }
}

// Row i holds the k word vectors of the window centred (per the padding rule) on word i.
template <typename T>
BasicMatrix<T> unfold(const BasicMatrix<T>& x, std::size_t k, std::size_t valid_len) {
  const std::size_t n = x.rows(), d = x.cols(), front = front_padding(k);
  BasicMatrix<T> u(n, k * d);
  for (std::size_t i = 0; i < valid_len; ++i)
    for (std::size_t o = 0; o < k; ++o) {
      if (i + o < front) continue;
      const std::size_t pos = i + o - front;
      if (pos >= valid_len) continue;
      std::copy_n(x.row(pos).data(), d, u.row(i).data() + o * d);
    }
  return u;
}

template <typename T>
void fold_add(const BasicMatrix<T>& du, std::size_t k, std::size_t valid_len, BasicMatrix<T>& grad_x) {
  const std::size_t d = grad_x.cols(), front = front_padding(k);
  for (std::size_t i = 0; i < valid_len; ++i)
    for (std::size_t o = 0; o < k; ++o) {
      if (i + o < front) continue;
      const std::size_t pos = i + o - front;
      if (pos >= valid_len) continue;
      const T* src = du.row(i).data() + o * d;
      T* dst = grad_x.row(pos).data();
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
}

std::size_t total_filters(auto filters) {
  std::size_t l = 0;
  for (const auto& f : filters) l += f.count();
  return l;
}

}  // namespace

template <typename T>
BasicMatrix<T> conv_feature_map(const BasicMatrix<T>& x, std::span<const FilterBank<T>> filters,
                                std::size_t valid_len) {
  if (valid_len > x.rows()) throw DomainError("conv_feature_map: valid_len exceeds sequence length");
  BasicMatrix<T> c(x.rows(), total_filters(filters));
  std::size_t offset = 0;
  for (const auto& bank : filters) {
    if (bank.weights.cols() != bank.width * x.cols())
      throw ShapeError("filter bank k=" + std::to_string(bank.width) + " is " + bank.weights.shape_string() +
                       " but inputs have dimension " + std::to_string(x.cols()));
    const auto u = unfold(x, bank.width, valid_len);
    BasicMatrix<T> pre(x.rows(), bank.count());
    add_matmul(pre, u, bank.weights, false, true);
    for (std::size_t i = 0; i < valid_len; ++i)
      for (std::size_t j = 0; j < bank.count(); ++j)
        c(i, offset + j) = activate(Activation::relu, pre(i, j) + bank.bias[j]);
    offset += bank.count();
  }
  return c;
}

template <typename T>
void conv_feature_map_backward(const BasicMatrix<T>& x, std::span<const FilterBank<T>> filters,
                               const BasicMatrix<T>& c, const BasicMatrix<T>& grad_c, std::size_t valid_len,
                               std::span<FilterBank<T>> filter_grads, BasicMatrix<T>* grad_x) {
  std::size_t offset = 0;
  for (std::size_t b = 0; b < filters.size(); ++b) {
    const auto& bank = filters[b];
    auto& gbank = filter_grads[b];
    BasicMatrix<T> grad_pre(x.rows(), bank.count());
    bool any = false;
    for (std::size_t i = 0; i < valid_len; ++i)
      for (std::size_t j = 0; j < bank.count(); ++j)
        if (c(i, offset + j) > T{0}) {
          grad_pre(i, j) = grad_c(i, offset + j);
          gbank.bias[j] += grad_pre(i, j);
          any = true;
        }
    offset += bank.count();
    if (!any) continue;
    const auto u = unfold(x, bank.width, valid_len);
    add_matmul(gbank.weights, grad_pre, u, true, false);
    if (grad_x) {
      BasicMatrix<T> du(x.rows(), u.cols());
      add_matmul(du, grad_pre, bank.weights);
      fold_add(du, bank.width, valid_len, *grad_x);
    }
  }
}

template <typename T>
BasicMatrix<T> attention_matrix(const BasicMatrix<T>& c, const BasicMatrix<T>& projection, std::size_t valid_len) {
  return softmax_columns(matmul(c, projection), valid_len);
}

template <typename T>
std::vector<T> gru_step(std::span<const T> x, std::span<const T> h_prev, const GruParams<T>& p) {
  const std::size_t m = p.u_z.rows(), d = p.w_z.cols();
  if (x.size() != d || h_prev.size() != m) throw ShapeError("gru_step: input or state size mismatch");
  std::vector<T> h(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T z = sigmoid(dot(p.w_z.row(i).data(), x.data(), d) + dot(p.u_z.row(i).data(), h_prev.data(), m));
    const T r = sigmoid(dot(p.w_r.row(i).data(), x.data(), d) + dot(p.u_r.row(i).data(), h_prev.data(), m));
    const T cand = std::tanh(dot(p.w_h.row(i).data(), x.data(), d) + r * dot(p.u_h.row(i).data(), h_prev.data(), m));
    h[i] = (T{1} - z) * cand + z * h_prev[i];
  }
  return h;
}

template <typename T>
GruTrace<T> gru_sequence(const BasicMatrix<T>& x, const GruParams<T>& p, std::size_t valid_len, bool reverse) {
  const std::size_t n = x.rows(), m = p.u_z.rows();
  if (x.cols() != p.w_z.cols()) throw ShapeError("gru_sequence: input dimension mismatch");
  GruTrace<T> tr{BasicMatrix<T>(n, m), BasicMatrix<T>(n, m), BasicMatrix<T>(n, m), BasicMatrix<T>(n, m),
                 BasicMatrix<T>(n, m)};
  BasicMatrix<T> xz(n, m), xr(n, m), xh(n, m);
  add_matmul(xz, x, p.w_z, false, true);
  add_matmul(xr, x, p.w_r, false, true);
  add_matmul(xh, x, p.w_h, false, true);

  std::vector<T> h_prev(m, T{0});
  for (std::size_t s = 0; s < valid_len; ++s) {
    const std::size_t t = reverse ? valid_len - 1 - s : s;
    for (std::size_t i = 0; i < m; ++i) {
      const T z = sigmoid(xz(t, i) + dot(p.u_z.row(i).data(), h_prev.data(), m));
      const T r = sigmoid(xr(t, i) + dot(p.u_r.row(i).data(), h_prev.data(), m));
      const T uh = dot(p.u_h.row(i).data(), h_prev.data(), m);
      const T cand = std::tanh(xh(t, i) + r * uh);
      tr.update(t, i) = z;
      tr.reset(t, i) = r;
      tr.recurrent(t, i) = uh;
      tr.candidate(t, i) = cand;
      tr.h(t, i) = (T{1} - z) * cand + z * h_prev[i];
    }
    std::copy_n(tr.h.row(t).data(), m, h_prev.data());
  }
  return tr;
}

template <typename T>
void gru_sequence_backward(const BasicMatrix<T>& x, const GruParams<T>& p, const GruTrace<T>& tr,
                           const BasicMatrix<T>& grad_h, std::size_t valid_len, bool reverse, GruParams<T>& grads,
                           BasicMatrix<T>* grad_x) {
  const std::size_t n = x.rows(), m = p.u_z.rows();
  BasicMatrix<T> ga_z(n, m), ga_r(n, m), ga_h(n, m), g_uh(n, m), h_prev_rows(n, m);
  std::vector<T> carry(m, T{0}), next(m);

  auto prev_index = [&](std::size_t t) -> std::ptrdiff_t {
    if (reverse) return t + 1 < valid_len ? static_cast<std::ptrdiff_t>(t + 1) : -1;
    return t > 0 ? static_cast<std::ptrdiff_t>(t - 1) : -1;
  };

  for (std::size_t s = valid_len; s-- > 0;) {
    const std::size_t t = reverse ? valid_len - 1 - s : s;
    const std::ptrdiff_t pi = prev_index(t);
    for (std::size_t i = 0; i < m; ++i) {
      const T hp = pi >= 0 ? tr.h(static_cast<std::size_t>(pi), i) : T{0};
      h_prev_rows(t, i) = hp;
      const T dh = grad_h(t, i) + carry[i];
      const T z = tr.update(t, i), r = tr.reset(t, i), cand = tr.candidate(t, i);
      const T d_cand = dh * (T{1} - z);
      const T d_z = dh * (hp - cand);
      next[i] = dh * z;
      const T da_h = d_cand * (T{1} - cand * cand);
      const T d_r = da_h * tr.recurrent(t, i);
      ga_h(t, i) = da_h;
      g_uh(t, i) = da_h * r;
      ga_z(t, i) = d_z * z * (T{1} - z);
      ga_r(t, i) = d_r * r * (T{1} - r);
    }
    add_transposed_matvec(p.u_z, ga_z.row(t).data(), next.data());
    add_transposed_matvec(p.u_r, ga_r.row(t).data(), next.data());
    add_transposed_matvec(p.u_h, g_uh.row(t).data(), next.data());
    carry.swap(next);
  }

  add_matmul(grads.w_z, ga_z, x, true, false);
  add_matmul(grads.w_r, ga_r, x, true, false);
  add_matmul(grads.w_h, ga_h, x, true, false);
  add_matmul(grads.u_z, ga_z, h_prev_rows, true, false);
  add_matmul(grads.u_r, ga_r, h_prev_rows, true, false);
  add_matmul(grads.u_h, g_uh, h_prev_rows, true, false);
  if (grad_x) {
    add_matmul(*grad_x, ga_z, p.w_z);
    add_matmul(*grad_x, ga_r, p.w_r);
    add_matmul(*grad_x, ga_h, p.w_h);
  }
}

template <typename T>
std::pair<BasicMatrix<T>, BasicMatrix<T>> bi_gru(const BasicMatrix<T>& x, const GruParams<T>& fwd,
                                                 const GruParams<T>& bwd, std::size_t valid_len) {
  return {gru_sequence(x, fwd, valid_len, false).h, gru_sequence(x, bwd, valid_len, true).h};
}

template <typename T>
std::vector<T> neural_tensor_fuse(std::span<const T> hf, std::span<const T> hb, const TensorLayerParams<T>& ntl) {
  const std::size_t m = ntl.slices.size();
  if (hf.size() != m || hb.size() != m) throw ShapeError("neural_tensor_fuse: state size mismatch");
  std::vector<T> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    T acc{0};
    for (std::size_t a = 0; a < m; ++a) acc += hf[a] * dot(ntl.slices[i].row(a).data(), hb.data(), m);
    out[i] = std::tanh(acc + ntl.bias[i]);
  }
  return out;
}

template <typename T>
BasicMatrix<T> tensor_layer(const BasicMatrix<T>& hf, const BasicMatrix<T>& hb, const TensorLayerParams<T>& ntl,
                            std::size_t valid_len) {
  const std::size_t n = hf.rows(), m = ntl.slices.size();
  if (hf.cols() != m || hb.cols() != m || hb.rows() != n) throw ShapeError("tensor_layer: state shape mismatch");
  BasicMatrix<T> out(n, m);
  BasicMatrix<T> q(n, m);
  for (std::size_t i = 0; i < m; ++i) {
    q.set_zero();
    add_matmul(q, hf, ntl.slices[i]);  // row t: hf_tᵀ·V^i
    for (std::size_t t = 0; t < valid_len; ++t)
      out(t, i) = std::tanh(dot(q.row(t).data(), hb.row(t).data(), m) + ntl.bias[i]);
  }
  return out;
}

template <typename T>
void tensor_layer_backward(const BasicMatrix<T>& hf, const BasicMatrix<T>& hb, const BasicMatrix<T>& hhat,
                           const BasicMatrix<T>& grad_hhat, const TensorLayerParams<T>& ntl, std::size_t valid_len,
                           TensorLayerParams<T>& grads, BasicMatrix<T>& grad_hf, BasicMatrix<T>& grad_hb) {
  const std::size_t n = hf.rows(), m = ntl.slices.size();
  BasicMatrix<T> q(n, m), hb_scaled(n, m);
  for (std::size_t i = 0; i < m; ++i) {
    bool any = false;
    std::vector<T> da(valid_len);
    for (std::size_t t = 0; t < valid_len; ++t) {
      const T y = hhat(t, i);
      da[t] = grad_hhat(t, i) * (T{1} - y * y);
      grads.bias[i] += da[t];
      any = any || da[t] != T{0};
    }
    if (!any) continue;
    hb_scaled.set_zero();
    for (std::size_t t = 0; t < valid_len; ++t)
      for (std::size_t c = 0; c < m; ++c) hb_scaled(t, c) = da[t] * hb(t, c);
    add_matmul(grads.slices[i], hf, hb_scaled, true, false);
    add_matmul(grad_hf, hb_scaled, ntl.slices[i], false, true);
    q.set_zero();
    add_matmul(q, hf, ntl.slices[i]);
    for (std::size_t t = 0; t < valid_len; ++t)
      for (std::size_t c = 0; c < m; ++c) grad_hb(t, c) += da[t] * q(t, c);
  }
}

template <typename T>
BasicMatrix<T> contextual_reps(const BasicMatrix<T>& hf, const BasicMatrix<T>& hb, const BasicMatrix<T>* hhat) {
  const std::size_t n = hf.rows(), m = hf.cols();
  if (hb.rows() != n || hb.cols() != m || (hhat && (hhat->rows() != n || hhat->cols() != m)))
    throw ShapeError("contextual_reps: row or width mismatch");
  BasicMatrix<T> h(n, (hhat ? 3 : 2) * m);
  for (std::size_t t = 0; t < n; ++t) {
    T* row = h.row(t).data();
    std::copy_n(hf.row(t).data(), m, row);
    std::copy_n(hb.row(t).data(), m, row + m);
    if (hhat) std::copy_n(hhat->row(t).data(), m, row + 2 * m);
  }
  return h;
}

template <typename T>
BasicMatrix<T> text_representation(const BasicMatrix<T>& a, const BasicMatrix<T>& h) {
  if (a.rows() != h.rows())
    throw ShapeError("text_representation: A is " + a.shape_string() + " but H is " + h.shape_string());
  BasicMatrix<T> s(a.cols(), h.cols());
  add_matmul(s, a, h, true, false);
  return s;
}

template <typename T>
BasicMatrix<T> classifier_logits(const BasicMatrix<T>& s, const ClassifierParams<T>& clf) {
  if (s.size() != clf.weights.rows())
    throw ShapeError("classify: flattened S has " + std::to_string(s.size()) + " entries, classifier expects " +
                     std::to_string(clf.weights.rows()));
  BasicMatrix<T> logits = clf.bias;
  const BasicMatrix<T> flat = BasicMatrix<T>::row_vector(s.flat());
  add_matmul(logits, flat, clf.weights);
  return logits;
}

template <typename T>
std::pair<BasicMatrix<T>, BasicMatrix<T>> classify(const BasicMatrix<T>& s, const ClassifierParams<T>& clf) {
  auto logits = classifier_logits(s, clf);
  auto probs = logits;
  softmax_inplace(probs.flat());
  return {std::move(logits), std::move(probs)};
}

template <typename T>
T cross_entropy(const BasicMatrix<T>& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw DomainError("label " + std::to_string(label) + " outside [0, " + std::to_string(probs.size()) + ")");
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], static_cast<T>(kProbabilityFloor)));
}

#define CRNN_INSTANTIATE_LAYERS(T)                                                                                \
  template BasicMatrix<T> conv_feature_map(const BasicMatrix<T>&, std::span<const FilterBank<T>>, std::size_t);   \
  template void conv_feature_map_backward(const BasicMatrix<T>&, std::span<const FilterBank<T>>,                  \
                                          const BasicMatrix<T>&, const BasicMatrix<T>&, std::size_t,              \
                                          std::span<FilterBank<T>>, BasicMatrix<T>*);                             \
  template BasicMatrix<T> attention_matrix(const BasicMatrix<T>&, const BasicMatrix<T>&, std::size_t);            \
  template std::vector<T> gru_step(std::span<const T>, std::span<const T>, const GruParams<T>&);                  \
  template GruTrace<T> gru_sequence(const BasicMatrix<T>&, const GruParams<T>&, std::size_t, bool);               \
  template void gru_sequence_backward(const BasicMatrix<T>&, const GruParams<T>&, const GruTrace<T>&,             \
                                      const BasicMatrix<T>&, std::size_t, bool, GruParams<T>&, BasicMatrix<T>*);  \
  template std::pair<BasicMatrix<T>, BasicMatrix<T>> bi_gru(const BasicMatrix<T>&, const GruParams<T>&,           \
                                                            const GruParams<T>&, std::size_t);                    \
  template std::vector<T> neural_tensor_fuse(std::span<const T>, std::span<const T>, const TensorLayerParams<T>&); \
  template BasicMatrix<T> tensor_layer(const BasicMatrix<T>&, const BasicMatrix<T>&, const TensorLayerParams<T>&, \
                                       std::size_t);                                                              \
  template void tensor_layer_backward(const BasicMatrix<T>&, const BasicMatrix<T>&, const BasicMatrix<T>&,        \
                                      const BasicMatrix<T>&, const TensorLayerParams<T>&, std::size_t,            \
                                      TensorLayerParams<T>&, BasicMatrix<T>&, BasicMatrix<T>&);                   \
  template BasicMatrix<T> contextual_reps(const BasicMatrix<T>&, const BasicMatrix<T>&, const BasicMatrix<T>*);   \
  template BasicMatrix<T> text_representation(const BasicMatrix<T>&, const BasicMatrix<T>&);                      \
  template BasicMatrix<T> classifier_logits(const BasicMatrix<T>&, const ClassifierParams<T>&);                   \
  template std::pair<BasicMatrix<T>, BasicMatrix<T>> classify(const BasicMatrix<T>&, const ClassifierParams<T>&); \
  template T cross_entropy(const BasicMatrix<T>&, int);

CRNN_INSTANTIATE_LAYERS(float)
CRNN_INSTANTIATE_LAYERS(double)

#undef CRNN_INSTANTIATE_LAYERS

}  // namespace crnn::model
