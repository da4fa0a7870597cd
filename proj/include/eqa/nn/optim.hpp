#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <vector>
#include <string>

#include "eqa/nn/param_store.hpp"

namespace eqa::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over every parameter in the store; gradients are zeroed
// afterwards.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& store, const AdamConfig& cfg) {
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  for (auto& p : store) {
    ++p.step;
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(p.step));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(p.step));
    p.m = b1 * p.m + (Scalar(1) - b1) * p.grad;
    p.v = b2 * p.v + (Scalar(1) - b2) * p.grad.cwiseProduct(p.grad);
    const Scalar lr = static_cast<Scalar>(cfg.lr);
    const Scalar eps = static_cast<Scalar>(cfg.eps);
    p.value.array() -= lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + eps);
    p.grad.setZero();
  }
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  Index coordinates = 0;
};

// Central-difference check of every parameter coordinate. `loss_fn(store,
// with_grad)` returns the loss and, when with_grad is set, accumulates exact
// gradients into the store. Relative error is |a - n| / max(|a|, |n|, floor);
// the floor keeps round-off on near-zero gradients from dominating.
// `max_coords` > 0 checks an evenly strided subset of each parameter.
template <typename Scalar>
GradCheckResult grad_check(const std::function<Scalar(ParamStore<Scalar>&, bool)>& loss_fn, ParamStore<Scalar>& store,
                           Scalar h = Scalar(1e-6), Scalar floor = Scalar(1e-3), Index max_coords = 0) {
  store.zero_grad();
  loss_fn(store, true);
  std::vector<Matrix<Scalar>> analytic;
  for (const auto& p : store) analytic.push_back(p.grad);
  store.zero_grad();

  GradCheckResult result;
  std::size_t pi = 0;
  for (auto& p : store) {
    const Index n = p.value.size();
    const Index stride = (max_coords > 0 && n > max_coords) ? (n + max_coords - 1) / max_coords : 1;
    for (Index k = 0; k < n; k += stride) {
      Scalar& w = p.value.data()[k];
      const Scalar saved = w;
      w = saved + h;
      const Scalar up = loss_fn(store, false);
      w = saved - h;
      const Scalar down = loss_fn(store, false);
      w = saved;
      const double numeric = static_cast<double>((up - down) / (2 * h));
      const double a = static_cast<double>(analytic[pi].data()[k]);
      const double denom = std::max({std::abs(a), std::abs(numeric), static_cast<double>(floor)});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error || result.worst_index < 0) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        if (rel >= result.max_rel_error) {
          result.worst_param = p.name;
          result.worst_index = k;
          result.analytic = a;
          result.numeric = numeric;
        }
      }
    }
    ++pi;
  }
  return result;
}

}  // namespace eqa::nn
