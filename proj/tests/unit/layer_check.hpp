#pragma once

// Finite-difference harness for single layers, independent of the library's
// own self-check code.

#include <functional>
#include <memory>
#include <vector>

#include "iqnet/layers.hpp"
#include "oracles.hpp"

namespace iqnet::oracle {

using LayerMaker = std::function<std::unique_ptr<Layer<double>>()>;

/// Worst relative error between analytic and central-difference gradients of
/// <forward(inputs), R> over every input and parameter. Every evaluation uses
/// a freshly built layer carrying the probed parameter values, so layers with
/// internal state or randomness see identical conditions each time.
inline double layer_grad_error(const LayerMaker& make, const std::vector<Tensor<double>>& inputs, Mode mode,
                               std::uint64_t seed) {
  std::vector<Tensor<double>> params;
  const auto proto = make();
  for (auto* p : proto->parameters()) params.push_back(p->value);

  auto eval = [&](const std::vector<Tensor<double>>& ins, const std::vector<Tensor<double>>& ps,
                  std::unique_ptr<Layer<double>>* keep = nullptr) {
    auto layer = make();
    auto lp = layer->parameters();
    for (std::size_t i = 0; i < lp.size(); ++i) lp[i]->value = ps[i];
    std::vector<const Tensor<double>*> ptrs;
    for (const auto& t : ins) ptrs.push_back(&t);
    auto y = layer->forward(std::span<const Tensor<double>* const>(ptrs), mode);
    if (keep) *keep = std::move(layer);
    return y;
  };

  std::unique_ptr<Layer<double>> layer;
  const auto y = eval(inputs, params, &layer);
  Rng rng(seed);
  const auto r = random_tensor(y.shape(), rng);
  layer->zero_grad();
  const auto grads = layer->backward(r);

  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto num = numeric_grad(
        [&](const Tensor<double>& x) {
          auto ins = inputs;
          ins[k] = x;
          return dot(eval(ins, params), r);
        },
        inputs[k]);
    worst = std::max(worst, rel_err(grads.at(k), num));
  }
  const auto lp = layer->parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto num = numeric_grad(
        [&](const Tensor<double>& x) {
          auto ps = params;
          ps[k] = x;
          return dot(eval(inputs, ps), r);
        },
        params[k]);
    worst = std::max(worst, rel_err(lp[k]->grad, num));
  }
  return worst;
}

}  // namespace iqnet::oracle
