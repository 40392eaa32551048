#include "iqnet/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "iqnet/ops.hpp"

namespace iqnet::selfcheck {

namespace {

Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so ReLU kinks stay out of the difference stencil.
Tensor<double> away_from_zero(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.05, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Distinct values at least 1e-3 apart, shuffled, so max pooling has no near-ties.
Tensor<double> distinct_values(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -1.0 + 2e-3 * static_cast<double>(i);
  rng.shuffle(std::span<double>(v));
  std::copy(v.begin(), v.end(), t.raw());
  return t;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform_int(hi - lo + 1));
}

}  // namespace

double relative_error(const Tensor<double>& analytic, const Tensor<double>& numeric) {
  if (analytic.shape() != numeric.shape()) throw DimensionError("relative_error: shape mismatch");
  double diff = 0;
  double na = 0;
  double nn = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale < 1e-10 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

Tensor<double> complex_conv_reference(const Tensor<double>& x, const ComplexKernelBank<double>& bank,
                                      std::size_t pad, std::size_t stride) {
  const std::size_t cin = x.extent(0);
  const std::size_t n = x.extent(2);
  const std::size_t cout = bank.out_channels();
  const std::size_t m = bank.length();
  const std::size_t out_n = conv_out_extent(n, m, pad, stride);
  Tensor<double> y({cout, 2, out_n});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t t = 0; t < out_n; ++t) {
      std::complex<double> acc(bank.bias.at(o, 0), bank.bias.at(o, 1));
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t k = 0; k < m; ++k) {
          const auto pos = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad);
          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n)) continue;
          const auto p = static_cast<std::size_t>(pos);
          const std::complex<double> s(x.at(c, 0, p), x.at(c, 1, p));
          const std::complex<double> w(bank.weights.at(o, c, 0, k), bank.weights.at(o, c, 1, k));
          acc += s * w;
        }
      }
      y.at(o, 0, t) = acc.real();
      y.at(o, 1, t) = acc.imag();
    }
  }
  return y;
}

double layer_gradient_error(const LayerFactory& make, const std::vector<Tensor<double>>& inputs, Mode mode,
                            std::uint64_t seed) {
  auto layer = make();
  std::vector<const Tensor<double>*> ptrs;
  for (const auto& t : inputs) ptrs.push_back(&t);
  const auto y = layer->forward(std::span<const Tensor<double>* const>(ptrs), mode);
  Rng rng(seed);
  const auto r = random_tensor(y.shape(), rng);
  layer->zero_grad();
  const auto input_grads = layer->backward(r);
  if (input_grads.size() != inputs.size()) throw DimensionError("layer returned the wrong number of gradients");

  auto probe = [&](std::size_t which_input, std::size_t which_param) {
    return [&, which_input, which_param](const Tensor<double>& v) {
      auto fresh = make();
      auto xs = inputs;
      if (which_param == SIZE_MAX) {
        xs[which_input] = v;
      } else {
        fresh->parameters()[which_param]->value = v;
      }
      std::vector<const Tensor<double>*> p;
      for (const auto& t : xs) p.push_back(&t);
      return weighted_sum(fresh->forward(std::span<const Tensor<double>* const>(p), mode), r);
    };
  };

  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto numeric = finite_diff_grad(probe(i, SIZE_MAX), inputs[i]);
    worst = std::max(worst, relative_error(input_grads[i], numeric));
  }
  const auto params = layer->parameters();
  for (std::size_t j = 0; j < params.size(); ++j) {
    const auto numeric = finite_diff_grad(probe(0, j), params[j]->value);
    worst = std::max(worst, relative_error(params[j]->grad, numeric));
  }
  return worst;
}

double softmax_xent_gradient_error(const Tensor<double>& logits, const std::vector<int>& labels) {
  const auto analytic = softmax_xent(logits, std::span<const int>(labels)).grad_logits;
  const auto numeric = finite_diff_grad(
      [&](const Tensor<double>& z) { return softmax_xent(z, std::span<const int>(labels)).loss; }, logits);
  return relative_error(analytic, numeric);
}

namespace {

CheckResult check_complex_oracle(const Options& opt, bool padded) {
  CheckResult res{padded ? "complex-conv padded realization" : "complex-conv oracle", opt.oracle_instances, 0, 1e-12};
  Rng rng(Rng::derive(opt.seed, {padded ? 2u : 1u}));
  for (std::size_t i = 0; i < opt.oracle_instances; ++i) {
    const std::size_t cin = pick(rng, 1, 4);
    const std::size_t cout = pick(rng, 1, 4);
    const std::size_t m = pick(rng, 1, 7);
    const std::size_t n = pick(rng, m, 64);
    const std::size_t pad = pick(rng, 0, m - 1);
    const std::size_t stride = pick(rng, 1, 3);
    ComplexKernelBank<double> bank(cout, cin, m);
    bank.weights = random_tensor(bank.weights.shape(), rng);
    bank.bias = random_tensor(bank.bias.shape(), rng);
    const auto x = random_tensor({cin, 2, n}, rng);
    const auto y = complex_conv_forward(x, bank, pad, stride);
    const auto ref = padded ? complex_conv_forward_padded(x, bank, pad, stride)
                            : complex_conv_reference(x, bank, pad, stride);
    res.max_error = std::max(res.max_error, max_abs_diff(y, ref));
  }
  return res;
}

CheckResult check_complex_linearity(const Options& opt) {
  CheckResult res{"complex-conv rotation equivariance", opt.gradient_instances, 0, 1e-6};
  Rng rng(Rng::derive(opt.seed, {3}));
  for (std::size_t i = 0; i < opt.gradient_instances; ++i) {
    const std::size_t cin = pick(rng, 1, 3);
    const std::size_t cout = pick(rng, 1, 3);
    const std::size_t m = pick(rng, 1, 5);
    const std::size_t n = pick(rng, m, 32);
    ComplexKernelBank<double> bank(cout, cin, m);
    bank.weights = random_tensor(bank.weights.shape(), rng);
    const double theta = rng.uniform(0.0, 2 * std::numbers::pi);
    const auto x = random_tensor({cin, 2, n}, rng);
    Tensor<double> xr(x.shape());
    const std::complex<double> rot = std::polar(1.0, theta);
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t t = 0; t < n; ++t) {
        const auto v = rot * std::complex<double>(x.at(c, 0, t), x.at(c, 1, t));
        xr.at(c, 0, t) = v.real();
        xr.at(c, 1, t) = v.imag();
      }
    }
    const auto y = complex_conv_forward(x, bank);
    const auto yr = complex_conv_forward(xr, bank);
    Tensor<double> expect(y.shape());
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t t = 0; t < y.extent(2); ++t) {
        const auto v = rot * std::complex<double>(y.at(o, 0, t), y.at(o, 1, t));
        expect.at(o, 0, t) = v.real();
        expect.at(o, 1, t) = v.imag();
      }
    }
    res.max_error = std::max(res.max_error, relative_error(yr, expect));
  }
  return res;
}

struct GradCase {
  LayerFactory make;
  std::vector<Tensor<double>> inputs;
  Mode mode = Mode::kTrain;
};

template <typename Gen>
CheckResult check_gradients(const std::string& name, const Options& opt, std::uint64_t key, Gen gen) {
  CheckResult res{name + " gradient", opt.gradient_instances, 0, 1e-4};
  Rng rng(Rng::derive(opt.seed, {0x6AD, key}));
  for (std::size_t i = 0; i < opt.gradient_instances; ++i) {
    GradCase c = gen(rng, Rng::derive(opt.seed, {0x5EED, key, i}));
    res.max_error = std::max(res.max_error, layer_gradient_error(c.make, c.inputs, c.mode, rng.next_u64()));
  }
  return res;
}

}  // namespace

std::vector<CheckResult> run_all(const Options& opt) {
  std::vector<CheckResult> out;
  out.push_back(check_complex_oracle(opt, false));
  out.push_back(check_complex_oracle(opt, true));
  out.push_back(check_complex_linearity(opt));

  out.push_back(check_gradients("real-conv", opt, 1, [](Rng& rng, std::uint64_t seed) {
    const std::size_t b = pick(rng, 1, 2), cin = pick(rng, 1, 3), h = pick(rng, 1, 2), kh = pick(rng, 1, h);
    const std::size_t cout = pick(rng, 1, 3), m = pick(rng, 1, 5), n = pick(rng, m, 12);
    const std::size_t pad = pick(rng, 0, m - 1), stride = pick(rng, 1, 2);
    return GradCase{[=] {
                      Rng init(seed);
                      auto l = std::make_unique<RealConv<double>>(cin, cout, kh, m, pad, stride, init);
                      l->bias().value = random_tensor(l->bias().value.shape(), init);
                      return l;
                    },
                    {random_tensor({b, cin, h, n}, rng)}};
  }));
  out.push_back(check_gradients("complex-conv", opt, 2, [](Rng& rng, std::uint64_t seed) {
    const std::size_t b = pick(rng, 1, 2), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
    const std::size_t m = pick(rng, 1, 5), n = pick(rng, m, 12), pad = pick(rng, 0, m - 1), stride = pick(rng, 1, 2);
    return GradCase{[=] {
                      Rng init(seed);
                      auto l = std::make_unique<ComplexConv<double>>(cin, cout, m, pad, stride, init);
                      l->bias().value = random_tensor(l->bias().value.shape(), init);
                      return l;
                    },
                    {random_tensor({b, cin, 2, n}, rng)}};
  }));
  out.push_back(check_gradients("dense", opt, 3, [](Rng& rng, std::uint64_t seed) {
    const std::size_t b = pick(rng, 1, 3), f = pick(rng, 1, 6), o = pick(rng, 1, 5);
    return GradCase{[=] {
                      Rng init(seed);
                      auto l = std::make_unique<Dense<double>>(f, o, init);
                      l->bias().value = random_tensor(l->bias().value.shape(), init);
                      return l;
                    },
                    {random_tensor({b, f}, rng)}};
  }));
  out.push_back(check_gradients("batchnorm", opt, 4, [](Rng& rng, std::uint64_t seed) {
    const std::size_t b = pick(rng, 2, 4), c = pick(rng, 1, 3), n = pick(rng, 1, 6);
    const bool flat = rng.uniform() < 0.3;
    const Shape shape = flat ? Shape{b, c} : Shape{b, c, 2, n};
    const std::size_t channels = flat ? c : 2 * c;
    const Mode mode = rng.uniform() < 0.2 ? Mode::kEval : Mode::kTrain;
    return GradCase{[=] {
                      Rng init(seed);
                      auto l = std::make_unique<BatchNorm<double>>(channels);
                      l->gamma().value = random_tensor({channels}, init, 0.5, 1.5);
                      l->beta().value = random_tensor({channels}, init);
                      l->running_mean() = random_tensor({channels}, init);
                      l->running_var() = random_tensor({channels}, init, 0.5, 2.0);
                      return l;
                    },
                    {random_tensor(shape, rng, -2.0, 2.0)},
                    mode};
  }));
  out.push_back(check_gradients("relu", opt, 5, [](Rng& rng, std::uint64_t) {
    const Shape shape{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 8)};
    return GradCase{[] { return std::make_unique<Relu<double>>(); }, {away_from_zero(shape, rng)}};
  }));
  out.push_back(check_gradients("maxpool-time", opt, 6, [](Rng& rng, std::uint64_t) {
    const std::size_t w = pick(rng, 1, 3), s = pick(rng, 1, 3);
    const Shape shape{pick(rng, 1, 2), pick(rng, 1, 3), 2, pick(rng, w, 12)};
    return GradCase{[=] { return std::make_unique<MaxPoolTime<double>>(w, s); }, {distinct_values(shape, rng)}};
  }));
  out.push_back(check_gradients("avgpool-time", opt, 7, [](Rng& rng, std::uint64_t) {
    const std::size_t w = pick(rng, 1, 3), s = pick(rng, 1, 3);
    const Shape shape{pick(rng, 1, 2), pick(rng, 1, 3), 2, pick(rng, w, 12)};
    return GradCase{[=] { return std::make_unique<AvgPoolTime<double>>(w, s); }, {random_tensor(shape, rng)}};
  }));
  out.push_back(check_gradients("global-avgpool-time", opt, 8, [](Rng& rng, std::uint64_t) {
    const Shape shape{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 2), pick(rng, 1, 10)};
    return GradCase{[] { return std::make_unique<GlobalAvgPoolTime<double>>(); }, {random_tensor(shape, rng)}};
  }));
  out.push_back(check_gradients("dropout", opt, 9, [](Rng& rng, std::uint64_t seed) {
    const Shape shape{pick(rng, 1, 3), pick(rng, 1, 8)};
    return GradCase{[=] { return std::make_unique<Dropout<double>>(0.3, seed); }, {random_tensor(shape, rng)}};
  }));
  out.push_back(check_gradients("flatten", opt, 10, [](Rng& rng, std::uint64_t) {
    const Shape shape{pick(rng, 1, 3), pick(rng, 1, 3), 2, pick(rng, 1, 5)};
    return GradCase{[] { return std::make_unique<Flatten<double>>(); }, {random_tensor(shape, rng)}};
  }));
  out.push_back(check_gradients("residual-add", opt, 11, [](Rng& rng, std::uint64_t) {
    const Shape shape{pick(rng, 1, 3), pick(rng, 1, 3), 2, pick(rng, 1, 6)};
    return GradCase{[] { return std::make_unique<ResidualAdd<double>>(); },
                    {random_tensor(shape, rng), random_tensor(shape, rng)}};
  }));
  out.push_back(check_gradients("concat", opt, 12, [](Rng& rng, std::uint64_t) {
    const std::size_t arity = pick(rng, 2, 3), b = pick(rng, 1, 2), n = pick(rng, 1, 6);
    std::vector<Tensor<double>> xs;
    for (std::size_t i = 0; i < arity; ++i) xs.push_back(random_tensor({b, pick(rng, 1, 3), 2, n}, rng));
    return GradCase{[=] { return std::make_unique<Concat<double>>(arity); }, xs};
  }));

  CheckResult xent{"softmax-xent gradient", opt.gradient_instances, 0, 1e-4};
  Rng rng(Rng::derive(opt.seed, {0x6AD, 13}));
  for (std::size_t i = 0; i < opt.gradient_instances; ++i) {
    const std::size_t b = pick(rng, 1, 4), k = pick(rng, 2, 11);
    std::vector<int> labels(b);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_int(k));
    xent.max_error = std::max(xent.max_error, softmax_xent_gradient_error(random_tensor({b, k}, rng, -3, 3), labels));
  }
  out.push_back(xent);
  return out;
}

}  // namespace iqnet::selfcheck
