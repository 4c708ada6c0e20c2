// SPDX-License-Identifier: Apache-2.0
#include "crnn/model/crnn.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "crnn/errors.hpp"
#include "crnn/numerics/ops.hpp"

namespace crnn::model {
namespace {

template <typename T>
BasicMatrix<T> draw_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  BasicMatrix<T> mask(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& v : mask.flat()) v = rng.bernoulli(rate) ? T{0} : keep;
  return mask;
}

template <typename T>
BasicMatrix<T> scale_columns(const BasicMatrix<T>& m, const BasicMatrix<T>& col_mask) {
  BasicMatrix<T> out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= col_mask[j];
  return out;
}

template <typename T>
void add_example(CrnnParams<T>& total, const ExampleGradient<T>& g, std::span<const TokenId> ids,
                 std::size_t valid_len) {
  auto dst = total.blocks();
  auto src = g.body.blocks();
  for (std::size_t b = 1; b < dst.size(); ++b) add_scaled(*dst[b].value, *src[b].value);
  for (std::size_t t = 0; t < valid_len; ++t) {
    const TokenId id = ids[t];
    if (id == corpus::Vocabulary::kPadId) continue;
    auto row = total.embedding.row(static_cast<std::size_t>(id));
    const auto gx = g.grad_x.row(t);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += gx[k];
  }
}

template <typename T>
void finish_gradient(CrnnParams<T>& grads, const CrnnParams<T>& params, const CrnnConfig& cfg,
                     std::size_t batch_size) {
  const T inv = T{1} / static_cast<T>(batch_size);
  auto g = grads.blocks();
  const auto p = params.blocks();
  const T two_lambda = static_cast<T>(2.0 * cfg.lambda);
  for (std::size_t b = 0; b < g.size(); ++b) {
    for (auto& v : g[b].value->flat()) v *= inv;
    if (cfg.lambda == 0.0 || !is_regularized(g[b].kind, cfg)) continue;
    const auto& theta = *p[b].value;
    auto& grad = *g[b].value;
    const std::size_t skip = g[b].kind == BlockKind::embedding ? theta.cols() : 0;  // pad row
    for (std::size_t i = skip; i < theta.size(); ++i) grad[i] += two_lambda * theta[i];
  }
}

template <typename T>
ExampleGradient<T> make_example_gradient(const CrnnConfig& cfg) {
  return {CrnnParams<T>::zeros(cfg, 0), {}};
}

}  // namespace

template <typename T>
ForwardTrace<T> forward_example(const CrnnParams<T>& params, const CrnnConfig& cfg, std::span<const TokenId> ids,
                                std::size_t valid_len, Mode mode, Rng* dropout) {
  const std::size_t n = ids.size(), d = cfg.embed_dim;
  if (valid_len < 1 || valid_len > n) throw DomainError("forward: valid length must lie in [1, n]");
  const bool drop = mode == Mode::train && cfg.dropout_rate > 0.0;
  if (drop && !dropout) throw DomainError("forward: train mode with dropout needs a random stream");

  ForwardTrace<T> tr;
  tr.token_ids.assign(ids.begin(), ids.end());
  tr.valid_len = valid_len;
  tr.x = BasicMatrix<T>(n, d);
  for (std::size_t t = 0; t < valid_len; ++t) {
    const auto id = static_cast<std::size_t>(ids[t]);
    if (id >= params.embedding.rows()) throw DomainError("token id " + std::to_string(id) + " outside embedding table");
    std::copy_n(params.embedding.row(id).data(), d, tr.x.row(t).data());
  }

  tr.c = conv_feature_map(tr.x, std::span<const FilterBank<T>>(params.filters), valid_len);
  if (drop) {
    tr.c_mask = draw_mask<T>(1, cfg.num_filters, cfg.dropout_rate, *dropout);
    tr.c_used = scale_columns(tr.c, tr.c_mask);
  } else {
    tr.c_used = tr.c;
  }
  tr.a = attention_matrix(tr.c_used, params.hop_projection, valid_len);

  tr.gru_fwd = gru_sequence(tr.x, params.gru_fwd, valid_len, false);
  tr.gru_bwd = gru_sequence(tr.x, params.gru_bwd, valid_len, true);
  tr.hf = tr.gru_fwd.h;
  tr.hb = tr.gru_bwd.h;
  if (cfg.use_ntl) tr.hhat = tensor_layer(tr.hf, tr.hb, params.ntl, valid_len);
  tr.h = contextual_reps(tr.hf, tr.hb, cfg.use_ntl ? &tr.hhat : nullptr);

  if (drop) {
    tr.h_mask = BasicMatrix<T>(n, cfg.rep_width());
    const auto valid = draw_mask<T>(valid_len, cfg.rep_width(), cfg.dropout_rate, *dropout);
    std::copy(valid.flat().begin(), valid.flat().end(), tr.h_mask.flat().begin());
    tr.h_used = hadamard(tr.h, tr.h_mask);
  } else {
    tr.h_used = tr.h;
  }
  tr.s = text_representation(tr.a, tr.h_used);
  if (drop) {
    tr.s_mask = draw_mask<T>(cfg.hops, cfg.rep_width(), cfg.dropout_rate, *dropout);
    tr.s_used = hadamard(tr.s, tr.s_mask);
  } else {
    tr.s_used = tr.s;
  }
  std::tie(tr.logits, tr.probs) = classify(tr.s_used, params.classifier);
  return tr;
}

template <typename T>
std::vector<ForwardTrace<T>> forward(const corpus::Batch& batch, const CrnnParams<T>& params, const CrnnConfig& cfg,
                                     Mode mode, Rng* rng) {
  std::vector<ForwardTrace<T>> traces;
  traces.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (mode == Mode::train && rng) {
      Rng local(rng->next_u64());
      traces.push_back(forward_example(params, cfg, batch.row(i), batch.lengths[i], mode, &local));
    } else {
      traces.push_back(forward_example(params, cfg, batch.row(i), batch.lengths[i], mode, nullptr));
    }
  }
  return traces;
}

template <typename T>
T regularization(const CrnnParams<T>& params, const CrnnConfig& cfg) {
  if (cfg.lambda == 0.0) return T{0};
  T total{0};
  for (const auto& b : params.blocks()) {
    if (!is_regularized(b.kind, cfg)) continue;
    const auto& m = *b.value;
    const std::size_t skip = b.kind == BlockKind::embedding ? m.cols() : 0;
    for (std::size_t i = skip; i < m.size(); ++i) total += m[i] * m[i];
  }
  return static_cast<T>(cfg.lambda) * total;
}

template <typename T>
T batch_loss(std::span<const ForwardTrace<T>> traces, std::span<const int> labels, const CrnnParams<T>& params,
             const CrnnConfig& cfg) {
  if (traces.size() != labels.size() || traces.empty()) throw DomainError("batch_loss: traces/labels mismatch");
  T total{0};
  for (std::size_t i = 0; i < traces.size(); ++i) total += cross_entropy(traces[i].probs, labels[i]);
  return total / static_cast<T>(traces.size()) + regularization(params, cfg);
}

template <typename T>
void backward_example(const ForwardTrace<T>& tr, int label, const CrnnParams<T>& params, const CrnnConfig& cfg,
                      ExampleGradient<T>& out) {
  if (tr.probs.empty() || tr.h.empty() || tr.a.empty() || (cfg.use_ntl && tr.hhat.empty()))
    throw std::logic_error("backward: trace is missing forward activations");
  const std::size_t n = tr.rows(), m = cfg.hidden, r = cfg.rep_width(), L = tr.valid_len;
  if (out.body.filters.size() != params.filters.size()) out = make_example_gradient<T>(cfg);
  out.body.set_zero();
  out.grad_x = BasicMatrix<T>(n, cfg.embed_dim);
  auto& g = out.body;

  // classifier
  BasicMatrix<T> grad_logits(1, cfg.num_classes);
  const auto y = static_cast<std::size_t>(label);
  if (label < 0 || y >= cfg.num_classes) throw DomainError("backward: label out of range");
  if (tr.probs[y] >= static_cast<T>(kProbabilityFloor)) {
    for (std::size_t k = 0; k < cfg.num_classes; ++k) grad_logits[k] = tr.probs[k];
    grad_logits[y] -= T{1};
  }
  add_scaled(g.classifier.bias, grad_logits);
  const auto s_flat = BasicMatrix<T>::row_vector(tr.s_used.flat());
  add_matmul(g.classifier.weights, s_flat, grad_logits, true, false);
  BasicMatrix<T> grad_s(cfg.hops, r);
  {
    BasicMatrix<T> grad_flat(1, cfg.hops * r);
    add_matmul(grad_flat, grad_logits, params.classifier.weights, false, true);
    std::copy(grad_flat.flat().begin(), grad_flat.flat().end(), grad_s.flat().begin());
  }
  if (!tr.s_mask.empty()) grad_s = hadamard(grad_s, tr.s_mask);

  // S = Aᵀ·H
  BasicMatrix<T> grad_a(n, cfg.hops), grad_h(n, r);
  add_matmul(grad_a, tr.h_used, grad_s, false, true);
  add_matmul(grad_h, tr.a, grad_s);
  if (!tr.h_mask.empty()) grad_h = hadamard(grad_h, tr.h_mask);

  // H = [hf ; hb ; ĥ]
  BasicMatrix<T> grad_hf(n, m), grad_hb(n, m), grad_hhat(n, m);
  for (std::size_t t = 0; t < L; ++t) {
    const T* row = grad_h.row(t).data();
    std::copy_n(row, m, grad_hf.row(t).data());
    std::copy_n(row + m, m, grad_hb.row(t).data());
    if (cfg.use_ntl) std::copy_n(row + 2 * m, m, grad_hhat.row(t).data());
  }
  if (cfg.use_ntl) tensor_layer_backward(tr.hf, tr.hb, tr.hhat, grad_hhat, params.ntl, L, g.ntl, grad_hf, grad_hb);
  gru_sequence_backward(tr.x, params.gru_fwd, tr.gru_fwd, grad_hf, L, false, g.gru_fwd, &out.grad_x);
  gru_sequence_backward(tr.x, params.gru_bwd, tr.gru_bwd, grad_hb, L, true, g.gru_bwd, &out.grad_x);

  // A = softmax_columns(C·W)
  BasicMatrix<T> grad_scores(n, cfg.hops);
  softmax_columns_backward(tr.a, grad_a, L, grad_scores);
  add_matmul(g.hop_projection, tr.c_used, grad_scores, true, false);
  BasicMatrix<T> grad_c(n, cfg.num_filters);
  add_matmul(grad_c, grad_scores, params.hop_projection, false, true);
  if (!tr.c_mask.empty()) grad_c = scale_columns(grad_c, tr.c_mask);
  conv_feature_map_backward(tr.x, std::span<const FilterBank<T>>(params.filters), tr.c, grad_c, L,
                            std::span<FilterBank<T>>(g.filters), &out.grad_x);
}

template <typename T>
CrnnParams<T> backward(std::span<const ForwardTrace<T>> traces, std::span<const int> labels,
                       const CrnnParams<T>& params, const CrnnConfig& cfg) {
  if (traces.size() != labels.size() || traces.empty()) throw DomainError("backward: traces/labels mismatch");
  CrnnParams<T> grads = params.zeros_like();
  auto ex = make_example_gradient<T>(cfg);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    backward_example(traces[i], labels[i], params, cfg, ex);
    add_example(grads, ex, traces[i].token_ids, traces[i].valid_len);
  }
  finish_gradient(grads, params, cfg, traces.size());
  return grads;
}

template <typename T>
T batch_gradient(const corpus::Batch& batch, const CrnnParams<T>& params, const CrnnConfig& cfg, Mode mode, Rng* rng,
                 CrnnParams<T>& grads, std::size_t threads) {
  const std::size_t B = batch.size();
  if (B == 0) throw DomainError("batch_gradient: empty batch");
  if (grads.filters.size() != params.filters.size() || !grads.embedding.same_shape(params.embedding))
    grads = params.zeros_like();
  else
    grads.set_zero();

  std::vector<std::uint64_t> seeds(B, 0);
  if (mode == Mode::train && rng)
    for (auto& s : seeds) s = rng->next_u64();

  threads = std::max<std::size_t>(1, std::min(threads, B));
  std::vector<ExampleGradient<T>> slots;
  for (std::size_t i = 0; i < threads; ++i) slots.push_back(make_example_gradient<T>(cfg));
  std::vector<T> losses(B, T{0});

  auto run = [&](std::size_t i, ExampleGradient<T>& slot) {
    Rng local(seeds[i]);
    const bool seeded = mode == Mode::train && rng;
    const auto tr = forward_example(params, cfg, batch.row(i), batch.lengths[i], mode, seeded ? &local : nullptr);
    losses[i] = cross_entropy(tr.probs, batch.labels[i]);
    backward_example(tr, batch.labels[i], params, cfg, slot);
  };

  for (std::size_t start = 0; start < B; start += threads) {
    const std::size_t end = std::min(B, start + threads);
    if (end - start == 1) {
      run(start, slots[0]);
    } else {
      std::vector<std::jthread> workers;
      for (std::size_t i = start; i < end; ++i) workers.emplace_back([&, i] { run(i, slots[i - start]); });
    }
    for (std::size_t i = start; i < end; ++i)
      add_example(grads, slots[i - start], batch.row(i), batch.lengths[i]);
  }
  finish_gradient(grads, params, cfg, B);

  T total{0};
  for (T l : losses) total += l;
  return total / static_cast<T>(B) + regularization(params, cfg);
}

#define CRNN_INSTANTIATE_MODEL(T)                                                                                 \
  template ForwardTrace<T> forward_example(const CrnnParams<T>&, const CrnnConfig&, std::span<const TokenId>,      \
                                           std::size_t, Mode, Rng*);                                              \
  template std::vector<ForwardTrace<T>> forward(const corpus::Batch&, const CrnnParams<T>&, const CrnnConfig&,     \
                                                Mode, Rng*);                                                      \
  template T regularization(const CrnnParams<T>&, const CrnnConfig&);                                             \
  template T batch_loss(std::span<const ForwardTrace<T>>, std::span<const int>, const CrnnParams<T>&,             \
                        const CrnnConfig&);                                                                       \
  template void backward_example(const ForwardTrace<T>&, int, const CrnnParams<T>&, const CrnnConfig&,            \
                                 ExampleGradient<T>&);                                                            \
  template CrnnParams<T> backward(std::span<const ForwardTrace<T>>, std::span<const int>, const CrnnParams<T>&,   \
                                  const CrnnConfig&);                                                             \
  template T batch_gradient(const corpus::Batch&, const CrnnParams<T>&, const CrnnConfig&, Mode, Rng*,            \
                            CrnnParams<T>&, std::size_t);

CRNN_INSTANTIATE_MODEL(float)
CRNN_INSTANTIATE_MODEL(double)

#undef CRNN_INSTANTIATE_MODEL

}  // namespace crnn::model
