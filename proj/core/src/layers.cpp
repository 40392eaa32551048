#include "iqnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernels.hpp"

namespace iqnet {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return "input";
    case LayerKind::kRealConv: return "real-conv";
    case LayerKind::kComplexConv: return "complex-conv";
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kMaxPoolTime: return "maxpool-time";
    case LayerKind::kAvgPoolTime: return "avgpool-time";
    case LayerKind::kGlobalAvgPoolTime: return "global-avgpool-time";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kResidualAdd: return "residual-add";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kSoftmaxXent: return "softmax-xent";
  }
  return "unknown";
}

namespace {

template <typename T>
const Tensor<T>& single(std::span<const Tensor<T>* const> inputs, const char* who) {
  if (inputs.size() != 1 || inputs[0] == nullptr) {
    throw DimensionError(std::string(who) + " takes exactly one input");
  }
  return *inputs[0];
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
void glorot(Tensor<T>& t, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace

// ---------------------------------------------------------------- RealConv

template <typename T>
RealConv<T>::RealConv(std::size_t cin, std::size_t cout, std::size_t kh, std::size_t m,
                      std::size_t pad, std::size_t stride, Rng& rng)
    : weight_("weight", Tensor<T>({cout, cin, kh, m})),
      bias_("bias", Tensor<T>({cout})),
      pad_(pad),
      stride_(stride) {
  glorot(weight_.value, static_cast<double>(cin * kh * m), static_cast<double>(cout * kh * m), rng);
}

template <typename T>
Tensor<T> RealConv<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "RealConv");
  if (x.rank() != 4) {
    throw DimensionError("RealConv expects [B,Cin,H,N], got " + shape_string(x.shape()));
  }
  input_ = x;
  auto out = crosscorr2d_batched(x, weight_.value, Pad2{0, pad_}, Stride2{1, stride_});
  const std::size_t cout = out.extent(1);
  const std::size_t plane = out.extent(2) * out.extent(3);
  for (std::size_t b = 0; b < out.extent(0); ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      T* p = out.raw() + (b * cout + o) * plane;
      const T bo = bias_.value[o];
      for (std::size_t i = 0; i < plane; ++i) p[i] += bo;
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> RealConv<T>::backward(const Tensor<T>& grad_out) {
  auto g = crosscorr2d_batched_grad(input_, weight_.value, grad_out, Pad2{0, pad_},
                                    Stride2{1, stride_});
  add_into(weight_.grad, g.kernels);
  const std::size_t cout = grad_out.extent(1);
  const std::size_t plane = grad_out.extent(2) * grad_out.extent(3);
  for (std::size_t o = 0; o < cout; ++o) {
    T s = 0;
    for (std::size_t b = 0; b < grad_out.extent(0); ++b) {
      const T* p = grad_out.raw() + (b * cout + o) * plane;
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
    }
    bias_.grad[o] += s;
  }
  std::vector<Tensor<T>> out;
  out.push_back(std::move(g.input));
  return out;
}

// ------------------------------------------------------------- ComplexConv

template <typename T>
ComplexConv<T>::ComplexConv(std::size_t cin, std::size_t cout, std::size_t m, std::size_t pad,
                            std::size_t stride, Rng& rng)
    : pad_(pad), stride_(stride) {
  ComplexKernelBank<T> bank(cout, cin, m);
  bank.init_uniform(rng);
  weight_ = Parameter<T>("weight", std::move(bank.weights));
  bias_ = Parameter<T>("bias", std::move(bank.bias));
}

template <typename T>
ComplexKernelBank<T> ComplexConv<T>::bank() const {
  ComplexKernelBank<T> b;
  b.weights = weight_.value;
  b.bias = bias_.value;
  return b;
}

template <typename T>
Tensor<T> ComplexConv<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "ComplexConv");
  if (x.rank() != 4) {
    throw DimensionError("ComplexConv expects [B,Cin,2,N], got " + shape_string(x.shape()));
  }
  input_ = x;
  return complex_conv_forward(x, bank(), pad_, stride_);
}

template <typename T>
std::vector<Tensor<T>> ComplexConv<T>::backward(const Tensor<T>& grad_out) {
  auto g = complex_conv_backward(input_, bank(), grad_out, pad_, stride_);
  add_into(weight_.grad, g.weights);
  add_into(bias_.grad, g.bias);
  std::vector<Tensor<T>> out;
  out.push_back(std::move(g.input));
  return out;
}

// ------------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::size_t in, std::size_t out, Rng& rng)
    : weight_("weight", Tensor<T>({in, out})), bias_("bias", Tensor<T>({out})) {
  glorot(weight_.value, static_cast<double>(in), static_cast<double>(out), rng);
}

template <typename T>
Tensor<T> Dense<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "Dense");
  if (x.rank() != 2 || x.extent(1) != weight_.value.extent(0)) {
    throw DimensionError("Dense expects [B," + std::to_string(weight_.value.extent(0)) +
                         "], got " + shape_string(x.shape()));
  }
  input_ = x;
  const std::size_t batch = x.extent(0);
  const std::size_t out_f = weight_.value.extent(1);
  Tensor<T> y({batch, out_f});
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(bias_.value.raw(), bias_.value.raw() + out_f, y.raw() + b * out_f);
  }
  detail::gemm<T>(false, false, batch, out_f, x.extent(1), x.raw(), weight_.value.raw(), y.raw(),
                  true);
  y.require_finite("Dense");
  return y;
}

template <typename T>
std::vector<Tensor<T>> Dense<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t batch = input_.extent(0);
  const std::size_t in_f = weight_.value.extent(0);
  const std::size_t out_f = weight_.value.extent(1);
  if (grad_out.shape() != Shape{batch, out_f}) {
    throw DimensionError("Dense backward: unexpected upstream gradient " +
                         shape_string(grad_out.shape()));
  }
  detail::gemm<T>(true, false, in_f, out_f, batch, input_.raw(), grad_out.raw(),
                  weight_.grad.raw(), true);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_f; ++o) bias_.grad[o] += grad_out[b * out_f + o];
  }
  Tensor<T> dx({batch, in_f});
  detail::gemm<T>(false, true, batch, in_f, out_f, grad_out.raw(), weight_.value.raw(), dx.raw(),
                  false);
  std::vector<Tensor<T>> out;
  out.push_back(std::move(dx));
  return out;
}

// -------------------------------------------------------------------- Relu

template <typename T>
Tensor<T> Relu<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "Relu");
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  output_ = y;
  return y;
}

template <typename T>
std::vector<Tensor<T>> Relu<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = output_[i] > T{0} ? grad_out[i] : T{0};
  std::vector<Tensor<T>> out;
  out.push_back(std::move(dx));
  return out;
}

// --------------------------------------------------------------- BatchNorm

namespace {

struct BnLayout {
  std::size_t batch, channels, inner;
};

BnLayout bn_layout(const Shape& s) {
  if (s.size() < 2) throw DimensionError("BatchNorm expects rank >= 2, got " + shape_string(s));
  if (s.size() == 2) return {s[0], s[1], 1};
  std::size_t ch = 1;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) ch *= s[i];
  return {s[0], ch, s.back()};
}

}  // namespace

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double eps, double momentum)
    : gamma_("gamma", Tensor<T>({channels}, T{1})),
      beta_("beta", Tensor<T>({channels})),
      running_mean_({channels}),
      running_var_({channels}, T{1}),
      eps_(eps),
      momentum_(momentum) {}

template <typename T>
Tensor<T> BatchNorm<T>::forward(std::span<const Tensor<T>* const> inputs, Mode mode) {
  const auto& x = single(inputs, "BatchNorm");
  const auto lay = bn_layout(x.shape());
  if (lay.channels != gamma_.value.size()) {
    throw DimensionError("BatchNorm configured for " + std::to_string(gamma_.value.size()) +
                         " channels, input " + shape_string(x.shape()) + " has " +
                         std::to_string(lay.channels));
  }
  if (mode == Mode::kTrain && lay.batch < 2) {
    throw ConfigError("BatchNorm in train mode needs a batch of at least 2");
  }
  mode_ = mode;
  shape_ = x.shape();
  const std::size_t count = lay.batch * lay.inner;
  xhat_ = Tensor<T>(x.shape());
  inv_std_.assign(lay.channels, T{0});
  Tensor<T> y(x.shape());

  for (std::size_t c = 0; c < lay.channels; ++c) {
    T mean;
    T var;
    if (mode == Mode::kTrain) {
      double s = 0;
      for (std::size_t b = 0; b < lay.batch; ++b) {
        const T* p = x.raw() + (b * lay.channels + c) * lay.inner;
        for (std::size_t i = 0; i < lay.inner; ++i) s += p[i];
      }
      const double m = s / static_cast<double>(count);
      double ss = 0;
      for (std::size_t b = 0; b < lay.batch; ++b) {
        const T* p = x.raw() + (b * lay.channels + c) * lay.inner;
        for (std::size_t i = 0; i < lay.inner; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      const double v = ss / static_cast<double>(count);
      mean = static_cast<T>(m);
      var = static_cast<T>(v);
      const double unbiased = count > 1 ? v * static_cast<double>(count) / (count - 1) : v;
      running_mean_[c] = static_cast<T>((1 - momentum_) * running_mean_[c] + momentum_ * m);
      running_var_[c] = static_cast<T>((1 - momentum_) * running_var_[c] + momentum_ * unbiased);
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var) + eps_));
    inv_std_[c] = inv;
    const T g = gamma_.value[c];
    const T be = beta_.value[c];
    for (std::size_t b = 0; b < lay.batch; ++b) {
      const std::size_t off = (b * lay.channels + c) * lay.inner;
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const T xh = (x[off + i] - mean) * inv;
        xhat_[off + i] = xh;
        y[off + i] = g * xh + be;
      }
    }
  }
  y.require_finite("BatchNorm");
  return y;
}

template <typename T>
std::vector<Tensor<T>> BatchNorm<T>::backward(const Tensor<T>& grad_out) {
  if (grad_out.shape() != shape_) {
    throw DimensionError("BatchNorm backward: unexpected upstream gradient " +
                         shape_string(grad_out.shape()));
  }
  const auto lay = bn_layout(shape_);
  const T count = static_cast<T>(lay.batch * lay.inner);
  Tensor<T> dx(shape_);
  for (std::size_t c = 0; c < lay.channels; ++c) {
    T sum_dy = 0;
    T sum_dy_xh = 0;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      const std::size_t off = (b * lay.channels + c) * lay.inner;
      for (std::size_t i = 0; i < lay.inner; ++i) {
        sum_dy += grad_out[off + i];
        sum_dy_xh += grad_out[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[c] += sum_dy_xh;
    beta_.grad[c] += sum_dy;
    const T g = gamma_.value[c];
    const T inv = inv_std_[c];
    for (std::size_t b = 0; b < lay.batch; ++b) {
      const std::size_t off = (b * lay.channels + c) * lay.inner;
      for (std::size_t i = 0; i < lay.inner; ++i) {
        if (mode_ == Mode::kTrain) {
          dx[off + i] = g * inv / count *
                        (count * grad_out[off + i] - sum_dy - xhat_[off + i] * sum_dy_xh);
        } else {
          dx[off + i] = g * inv * grad_out[off + i];
        }
      }
    }
  }
  std::vector<Tensor<T>> out;
  out.push_back(std::move(dx));
  return out;
}

// ------------------------------------------------------------ Time pooling

namespace {

std::size_t rows_of(const Shape& s) {
  if (s.size() < 2) throw DimensionError("time pooling expects rank >= 2, got " + shape_string(s));
  return shape_size(s) / s.back();
}

}  // namespace

template <typename T>
MaxPoolTime<T>::MaxPoolTime(std::size_t width, std::size_t stride) : width_(width), stride_(stride) {
  if (width == 0 || stride == 0) throw ConfigError("MaxPoolTime width and stride must be positive");
}

template <typename T>
Tensor<T> MaxPoolTime<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "MaxPoolTime");
  in_shape_ = x.shape();
  const std::size_t rows = rows_of(x.shape());
  const std::size_t n = x.shape().back();
  const std::size_t on = conv_out_extent(n, width_, 0, stride_);
  Shape os = x.shape();
  os.back() = on;
  Tensor<T> y(os);
  argmax_.assign(rows * on, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.raw() + r * n;
    for (std::size_t t = 0; t < on; ++t) {
      std::size_t best = t * stride_;
      for (std::size_t k = 1; k < width_; ++k) {
        if (src[t * stride_ + k] > src[best]) best = t * stride_ + k;
      }
      argmax_[r * on + t] = r * n + best;
      y[r * on + t] = src[best];
    }
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> MaxPoolTime<T>::backward(const Tensor<T>& grad_out) {
  if (grad_out.size() != argmax_.size()) {
    throw DimensionError("MaxPoolTime backward: unexpected upstream gradient " +
                         shape_string(grad_out.shape()));
  }
  Tensor<T> dx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx[argmax_[i]] += grad_out[i];
  std::vector<Tensor<T>> out;
  out.push_back(std::move(dx));
  return out;
}

template <typename T>
AvgPoolTime<T>::AvgPoolTime(std::size_t width, std::size_t stride) : width_(width), stride_(stride) {
  if (width == 0 || stride == 0) throw ConfigError("AvgPoolTime width and stride must be positive");
}

template <typename T>
Tensor<T> AvgPoolTime<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "AvgPoolTime");
  in_shape_ = x.shape();
  const std::size_t rows = rows_of(x.shape());
  const std::size_t n = x.shape().back();
  const std::size_t on = conv_out_extent(n, width_, 0, stride_);
  Shape os = x.shape();
  os.back() = on;
  Tensor<T> y(os);
  const T scale = T{1} / static_cast<T>(width_);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.raw() + r * n;
    for (std::size_t t = 0; t < on; ++t) {
      T s = 0;
      for (std::size_t k = 0; k < width_; ++k) s += src[t * stride_ + k];
      y[r * on + t] = s * scale;
    }
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> AvgPoolTime<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t rows = rows_of(in_shape_);
  const std::size_t n = in_shape_.back();
  const std::size_t on = grad_out.shape().back();
  if (grad_out.size() != rows * on) {
    throw DimensionError("AvgPoolTime backward: unexpected upstream gradient " +
                         shape_string(grad_out.shape()));
  }
  Tensor<T> dx(in_shape_);
  const T scale = T{1} / static_cast<T>(width_);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < on; ++t) {
      const T g = grad_out[r * on + t] * scale;
      for (std::size_t k = 0; k < width_; ++k) dx[r * n + t * stride_ + k] += g;
    }
  }
  std::vector<Tensor<T>> out;
  out.push_back(std::move(dx));
  return out;
}

template <typename T>
Tensor<T> GlobalAvgPoolTime<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "GlobalAvgPoolTime");
  in_shape_ = x.shape();
  if (x.rank() < 3) {
    throw DimensionError("GlobalAvgPoolTime expects [B,...,N], got " + shape_string(x.shape()));
  }
  const std::size_t rows = rows_of(x.shape());
  const std::size_t n = x.shape().back();
  Tensor<T> y({x.extent(0), rows / x.extent(0)});
  for (std::size_t r = 0; r < rows; ++r) {
    T s = 0;
    for (std::size_t t = 0; t < n; ++t) s += x[r * n + t];
    y[r] = s / static_cast<T>(n);
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> GlobalAvgPoolTime<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t rows = rows_of(in_shape_);
  const std::size_t n = in_shape_.back();
  if (grad_out.size() != rows) {
    throw DimensionError("GlobalAvgPoolTime backward: unexpected upstream gradient " +
                         shape_string(grad_out.shape()));
  }
  Tensor<T> dx(in_shape_);
  for (std::size_t r = 0; r < rows; ++r) {
    const T g = grad_out[r] / static_cast<T>(n);
    for (std::size_t t = 0; t < n; ++t) dx[r * n + t] = g;
  }
  std::vector<Tensor<T>> out;
  out.push_back(std::move(dx));
  return out;
}

// ----------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(std::span<const Tensor<T>* const> inputs, Mode mode) {
  const auto& x = single(inputs, "Dropout");
  active_ = mode == Mode::kTrain && p_ > 0.0;
  if (!active_) return x;
  mask_ = Tensor<T>(x.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p_));
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng_.uniform() >= p_ ? keep_scale : T{0};
    y[i] = x[i] * mask_[i];
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> Dropout<T>::backward(const Tensor<T>& grad_out) {
  std::vector<Tensor<T>> out;
  if (!active_) {
    out.push_back(grad_out);
    return out;
  }
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * mask_[i];
  out.push_back(std::move(dx));
  return out;
}

// --------------------------------------------------------- Structural ops

template <typename T>
Tensor<T> Flatten<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  const auto& x = single(inputs, "Flatten");
  in_shape_ = x.shape();
  return x.reshaped({x.extent(0), x.size() / x.extent(0)});
}

template <typename T>
std::vector<Tensor<T>> Flatten<T>::backward(const Tensor<T>& grad_out) {
  std::vector<Tensor<T>> out;
  out.push_back(grad_out.reshaped(in_shape_));
  return out;
}

template <typename T>
Tensor<T> ResidualAdd<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  if (inputs.size() != 2) throw DimensionError("ResidualAdd takes exactly two inputs");
  const auto& a = *inputs[0];
  const auto& b = *inputs[1];
  if (a.shape() != b.shape()) {
    throw DimensionError("ResidualAdd shape mismatch: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

template <typename T>
std::vector<Tensor<T>> ResidualAdd<T>::backward(const Tensor<T>& grad_out) {
  return {grad_out, grad_out};
}

template <typename T>
Tensor<T> Concat<T>::forward(std::span<const Tensor<T>* const> inputs, Mode) {
  if (inputs.size() != arity_ || arity_ == 0) {
    throw DimensionError("Concat expects " + std::to_string(arity_) + " inputs");
  }
  const Shape& first = inputs[0]->shape();
  if (first.size() < 2) throw DimensionError("Concat expects rank >= 2 inputs");
  in_shapes_.clear();
  std::size_t channels = 0;
  for (const auto* t : inputs) {
    const Shape& s = t->shape();
    const bool same_rest = s.size() == first.size() && s[0] == first[0] &&
                           std::equal(s.begin() + 2, s.end(), first.begin() + 2);
    if (!same_rest) {
      throw DimensionError("Concat: " + shape_string(s) + " incompatible with " +
                           shape_string(first));
    }
    in_shapes_.push_back(s);
    channels += s[1];
  }
  Shape os = first;
  os[1] = channels;
  Tensor<T> y(os);
  const std::size_t inner = shape_size(first) / (first[0] * first[1]);
  const std::size_t batch = first[0];
  for (std::size_t b = 0; b < batch; ++b) {
    T* dst = y.raw() + b * channels * inner;
    for (const auto* t : inputs) {
      const std::size_t n = t->extent(1) * inner;
      const T* src = t->raw() + b * n;
      dst = std::copy(src, src + n, dst);
    }
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> Concat<T>::backward(const Tensor<T>& grad_out) {
  const Shape& first = in_shapes_.front();
  const std::size_t inner = shape_size(first) / (first[0] * first[1]);
  const std::size_t batch = first[0];
  const std::size_t channels = grad_out.extent(1);
  std::vector<Tensor<T>> out;
  for (const auto& s : in_shapes_) out.emplace_back(s);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* src = grad_out.raw() + b * channels * inner;
    for (auto& g : out) {
      const std::size_t n = g.extent(1) * inner;
      std::copy(src, src + n, g.raw() + b * n);
      src += n;
    }
  }
  return out;
}

// ------------------------------------------------------------ Softmax-xent

template <typename T>
SoftmaxXentResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.extent(0) != labels.size()) {
    throw DimensionError("softmax_xent expects logits [B,K] with B labels, got " +
                         shape_string(logits.shape()) + " and " + std::to_string(labels.size()));
  }
  const std::size_t batch = logits.extent(0);
  const std::size_t k = logits.extent(1);
  SoftmaxXentResult<T> r{T{0}, Tensor<T>(logits.shape())};
  double total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw InputError("softmax_xent: label " + std::to_string(label) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const T* z = logits.raw() + b * k;
    const T zmax = *std::max_element(z, z + k);
    T sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
    const T lse = zmax + std::log(sum);
    total += static_cast<double>(lse - z[label]);
    T* g = r.grad_logits.raw() + b * k;
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = std::exp(z[j] - lse) / static_cast<T>(batch);
    }
    g[label] -= T{1} / static_cast<T>(batch);
  }
  r.loss = static_cast<T>(total / static_cast<double>(batch));
  return r;
}

#define IQNET_INSTANTIATE(T)                                                              \
  template class RealConv<T>;                                                             \
  template class ComplexConv<T>;                                                          \
  template class Dense<T>;                                                                \
  template class Relu<T>;                                                                 \
  template class BatchNorm<T>;                                                            \
  template class MaxPoolTime<T>;                                                          \
  template class AvgPoolTime<T>;                                                          \
  template class GlobalAvgPoolTime<T>;                                                    \
  template class Dropout<T>;                                                              \
  template class Flatten<T>;                                                              \
  template class ResidualAdd<T>;                                                          \
  template class Concat<T>;                                                               \
  template SoftmaxXentResult<T> softmax_xent(const Tensor<T>&, std::span<const int>);

IQNET_INSTANTIATE(float)
IQNET_INSTANTIATE(double)
#undef IQNET_INSTANTIATE

}  // namespace iqnet
