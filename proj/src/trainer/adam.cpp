// SPDX-License-Identifier: Apache-2.0
#include "crnn/trainer/adam.hpp"

#include <cmath>

#include "crnn/errors.hpp"

namespace crnn::trainer {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("invalid training config: " + msg); };
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (batch_size < 1) fail("batch size must be >= 1");
  if (threads < 1) fail("threads must be >= 1");
}

template <typename T>
void adam_update(model::CrnnParams<T>& params, const model::CrnnParams<T>& grads, AdamState<T>& state,
                 const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T lr = static_cast<T>(cfg.learning_rate), eps = static_cast<T>(cfg.eps);

  auto p = params.blocks();
  auto g = grads.blocks();
  auto m = state.first.blocks();
  auto v = state.second.blocks();
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw ShapeError("adam_update: parameter, gradient and moment sets differ");
  for (std::size_t b = 0; b < p.size(); ++b) {
    auto& theta = *p[b].value;
    const auto& grad = *g[b].value;
    auto& mom1 = *m[b].value;
    auto& mom2 = *v[b].value;
    if (!theta.same_shape(grad) || !theta.same_shape(mom1) || !theta.same_shape(mom2))
      throw ShapeError("adam_update: block " + p[b].name + " shapes differ");
    const std::size_t start = p[b].kind == model::BlockKind::embedding ? theta.cols() : 0;
    for (std::size_t i = start; i < theta.size(); ++i) {
      const T gi = grad[i];
      mom1[i] = b1 * mom1[i] + (T{1} - b1) * gi;
      mom2[i] = b2 * mom2[i] + (T{1} - b2) * gi * gi;
      const T mhat = mom1[i] / c1;
      const T vhat = mom2[i] / c2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template void adam_update(model::CrnnParams<float>&, const model::CrnnParams<float>&, AdamState<float>&,
                          const TrainConfig&);
template void adam_update(model::CrnnParams<double>&, const model::CrnnParams<double>&, AdamState<double>&,
                          const TrainConfig&);

}  // namespace crnn::trainer
