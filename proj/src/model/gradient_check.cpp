// SPDX-License-Identifier: Apache-2.0
#include "crnn/model/gradient_check.hpp"

#include <atomic>

#include "crnn/errors.hpp"
#include "crnn/model/crnn.hpp"
#include "crnn/numerics/ops.hpp"

namespace crnn::model {

namespace {

std::atomic<double> g_corruption{0.0};

}  // namespace

void set_gradient_corruption(double delta) noexcept { g_corruption.store(delta); }

ModelGradCheck check_model_gradient(const CrnnConfig& cfg, const CrnnParams<double>& params,
                                    const corpus::Batch& batch, double eps, std::uint64_t dropout_seed) {
  cfg.validate();
  CrnnParams<double> work = params;
  ModelGradCheck out;
  std::vector<GradSlot<double>> slots;
  for (const auto& b : work.blocks()) {
    out.block_names.push_back(b.name);
    slots.emplace_back(*b.value);
  }

  Objective objective = [&](std::span<GradSlot<double>> theta, bool with_grad) {
    auto blocks = work.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) *blocks[i].value = theta[i].value;
    Rng rng(dropout_seed);
    const Mode mode = cfg.dropout_rate > 0.0 ? Mode::train : Mode::eval;
    auto traces = forward(batch, work, cfg, mode, &rng);
    const double loss = batch_loss<double>(traces, batch.labels, work, cfg);
    if (with_grad) {
      auto grads = backward<double>(traces, batch.labels, work, cfg);
      auto gb = grads.blocks();
      for (std::size_t i = 0; i < gb.size(); ++i) add_scaled(theta[i].grad, *gb[i].value);
      const double delta = g_corruption.load();
      if (delta != 0.0) {
        // last block is the classifier bias, always present
        theta.back().grad[0] += delta;
      }
    }
    return loss;
  };
  out.result = grad_check(objective, slots, eps);
  return out;
}

TinyProblem tiny_problem(bool use_ntl, std::uint64_t seed) {
  TinyProblem p;
  auto& cfg = p.config;
  cfg.embed_dim = 4;
  cfg.hidden = 3;
  cfg.filter_sizes = {1, 3};
  cfg.num_filters = 6;
  cfg.hops = 2;
  cfg.num_classes = 2;
  cfg.use_ntl = use_ntl;
  cfg.dropout_rate = 0.0;
  cfg.lambda = 0.001;

  const std::size_t vocab = 9;
  Rng rng(seed);
  BasicMatrix<double> emb(vocab, cfg.embed_dim);
  for (std::size_t i = cfg.embed_dim; i < emb.size(); ++i) emb[i] = rng.uniform(-0.5, 0.5);
  p.params = CrnnParams<double>::initialize(cfg, std::move(emb), rng);
  // non-zero biases so their gradients are exercised
  for (auto& b : p.params.blocks())
    if (b.kind == BlockKind::bias)
      for (std::size_t i = 0; i < b.value->size(); ++i) (*b.value)[i] = rng.uniform(-0.1, 0.1);

  p.batch.width = 5;
  p.batch.ids = {2, 5, 3, 8, 1, 4, 7, 2, 0, 0};
  p.batch.lengths = {5, 3};
  p.batch.labels = {1, 0};
  return p;
}

}  // namespace crnn::model
