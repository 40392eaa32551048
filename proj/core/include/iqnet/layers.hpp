#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iqnet/complex_conv.hpp"
#include "iqnet/ops.hpp"
#include "iqnet/rng.hpp"
#include "iqnet/tensor.hpp"

namespace iqnet {

enum class Mode { kTrain, kEval };

enum class LayerKind {
  kInput,
  kRealConv,
  kComplexConv,
  kDense,
  kRelu,
  kBatchNorm,
  kMaxPoolTime,
  kAvgPoolTime,
  kGlobalAvgPoolTime,
  kDropout,
  kFlatten,
  kResidualAdd,
  kConcat,
  kSoftmaxXent,
};

std::string_view layer_kind_name(LayerKind kind);

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
};

/// One node of a model: a forward map with its exact analytic backward.
///
/// `forward` caches whatever `backward` needs; `backward` must be called at
/// most once per `forward` and returns one gradient per input while
/// accumulating into the parameter gradients.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::size_t arity() const { return 1; }
  virtual Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) = 0;
  virtual std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) = 0;

  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  /// Non-trainable persistent state (batch norm running statistics).
  virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    const Tensor<T>* in[] = {&x};
    return forward(std::span<const Tensor<T>* const>(in), mode);
  }

  void zero_grad() {
    for (auto* p : parameters()) p->grad.fill(T{0});
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
  }
};

/// Real cross-correlation over [B, Cin, H, N] with a [Cout, Cin, kh, m] kernel.
/// Padding and stride act on time only; the kernel height is consumed
/// without padding, so kh == H collapses the row axis to 1.
template <typename T>
class RealConv final : public Layer<T> {
 public:
  RealConv(std::size_t cin, std::size_t cout, std::size_t kh, std::size_t m, std::size_t pad,
           std::size_t stride, Rng& rng);

  LayerKind kind() const override { return LayerKind::kRealConv; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  Parameter<T> weight_;
  Parameter<T> bias_;
  std::size_t pad_;
  std::size_t stride_;
  Tensor<T> input_;
};

/// Complex convolution layer over [B, Cin, 2, N] feature maps.
template <typename T>
class ComplexConv final : public Layer<T> {
 public:
  ComplexConv(std::size_t cin, std::size_t cout, std::size_t m, std::size_t pad,
              std::size_t stride, Rng& rng);

  LayerKind kind() const override { return LayerKind::kComplexConv; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  ComplexKernelBank<T> bank() const;

 private:
  Parameter<T> weight_;  // [Cout, Cin, 2, m]
  Parameter<T> bias_;    // [Cout, 2]
  std::size_t pad_;
  std::size_t stride_;
  Tensor<T> input_;
};

/// Affine map [B, F] -> [B, O] with W [F, O] and b [O].
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out, Rng& rng);

  LayerKind kind() const override { return LayerKind::kDense; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kRelu; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

 private:
  Tensor<T> output_;
};

/// Batch normalization. For rank >= 3 inputs every index of the middle axes
/// is its own statistical channel (so the I and Q rows of a complex map are
/// normalized independently); statistics reduce over batch and time. Rank-2
/// inputs normalize per feature.
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, double eps = 1e-5, double momentum = 0.1);

  LayerKind kind() const override { return LayerKind::kBatchNorm; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, Tensor<T>*>> buffers() override {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
  }

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

 private:
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  double eps_;
  double momentum_;

  Mode mode_ = Mode::kEval;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  Shape shape_;
};

/// Max pooling along the last (time) axis; ties go to the earliest index.
template <typename T>
class MaxPoolTime final : public Layer<T> {
 public:
  MaxPoolTime(std::size_t width, std::size_t stride);

  LayerKind kind() const override { return LayerKind::kMaxPoolTime; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

 private:
  std::size_t width_;
  std::size_t stride_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

template <typename T>
class AvgPoolTime final : public Layer<T> {
 public:
  AvgPoolTime(std::size_t width, std::size_t stride);

  LayerKind kind() const override { return LayerKind::kAvgPoolTime; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

 private:
  std::size_t width_;
  std::size_t stride_;
  Shape in_shape_;
};

/// Mean over time: [B, ..., N] -> [B, prod(...)].
template <typename T>
class GlobalAvgPoolTime final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kGlobalAvgPoolTime; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

 private:
  Shape in_shape_;
};

/// Inverted dropout. Masks are drawn from a layer-owned counter RNG so a
/// training run is reproducible from the model seed.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double p, std::uint64_t seed);

  LayerKind kind() const override { return LayerKind::kDropout; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

  double probability() const { return p_; }

 private:
  double p_;
  Rng rng_;
  Tensor<T> mask_;
  bool active_ = false;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kFlatten; }
  using Layer<T>::forward;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

 private:
  Shape in_shape_;
};

template <typename T>
class ResidualAdd final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::kResidualAdd; }
  using Layer<T>::forward;
  std::size_t arity() const override { return 2; }
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;
};

/// Concatenation along axis 1 (channels). All other extents must agree.
template <typename T>
class Concat final : public Layer<T> {
 public:
  explicit Concat(std::size_t arity) : arity_(arity) {}

  LayerKind kind() const override { return LayerKind::kConcat; }
  using Layer<T>::forward;
  std::size_t arity() const override { return arity_; }
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, Mode mode) override;
  std::vector<Tensor<T>> backward(const Tensor<T>& grad_out) override;

 private:
  std::size_t arity_;
  std::vector<Shape> in_shapes_;
};

template <typename T>
struct SoftmaxXentResult {
  T loss;
  Tensor<T> grad_logits;
};

/// Mean cross-entropy of softmax(logits) against integer labels, with the
/// gradient (softmax - onehot) / B.
template <typename T>
SoftmaxXentResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels);

}  // namespace iqnet
