#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "saved/autodiff/tensor.hpp"

namespace saved::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, one pair per parameter tensor.
template <typename Scalar>
struct AdamState {
  std::vector<typename Tensor<Scalar>::Vector> m;
  std::vector<typename Tensor<Scalar>::Vector> v;
  std::int64_t step = 0;

  static AdamState zeros_like(const std::vector<Tensor<Scalar>*>& params) {
    AdamState s;
    for (const auto* p : params) {
      s.m.push_back(Tensor<Scalar>::Vector::Zero(p->numel()));
      s.v.push_back(Tensor<Scalar>::Vector::Zero(p->numel()));
    }
    return s;
  }
};

/// One bias-corrected Adam update applied in place, reading each
/// parameter's accumulated gradient.
template <typename Scalar>
void adam_step(const std::vector<Tensor<Scalar>*>& params, AdamState<Scalar>& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->numel() || state.v[i].size() != params[i]->numel() ||
        params[i]->grad().size() != params[i]->numel()) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }
  ++state.step;
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    auto& p = params[i]->value();
    const auto& g = params[i]->grad();
    for (Index j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (Scalar(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Scalar(1) - b2) * g[j] * g[j];
      const Scalar mhat = m[j] / c1;
      const Scalar vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace saved::ad
