#include "iqnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"

namespace iqnet {

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t pad,
                            std::size_t stride) {
  if (stride == 0) throw DimensionError("stride must be positive");
  if (kernel == 0 || kernel > in + 2 * pad) {
    throw DimensionError("kernel extent " + std::to_string(kernel) +
                         " exceeds padded input extent " + std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace {

template <typename T>
detail::ConvGeometry geometry(const Shape& in, const Shape& k, Pad2 pad, Stride2 stride) {
  if (in.size() != 4 || k.size() != 4) {
    throw DimensionError("crosscorr2d expects input [B,Cin,H,W] and kernels [Cout,Cin,kh,kw], got " +
                         shape_string(in) + " and " + shape_string(k));
  }
  if (in[1] != k[1]) {
    throw DimensionError("crosscorr2d channel mismatch: input " + shape_string(in) + ", kernels " +
                         shape_string(k));
  }
  detail::ConvGeometry g{};
  g.batch = in[0];
  g.cin = in[1];
  g.h = in[2];
  g.w = in[3];
  g.kh = k[2];
  g.kw = k[3];
  g.ph = pad.h;
  g.pw = pad.w;
  g.sh = stride.h;
  g.sw = stride.w;
  g.oh = conv_out_extent(g.h, g.kh, g.ph, g.sh);
  g.ow = conv_out_extent(g.w, g.kw, g.pw, g.sw);
  return g;
}

Shape with_batch(const Shape& s) {
  Shape out{1};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

Shape drop_batch(const Shape& s) { return Shape(s.begin() + 1, s.end()); }

}  // namespace

template <typename T>
Tensor<T> crosscorr2d_batched(const Tensor<T>& input, const Tensor<T>& kernels, Pad2 pad,
                              Stride2 stride) {
  const auto g = geometry<T>(input.shape(), kernels.shape(), pad, stride);
  const std::size_t cout = kernels.extent(0);
  std::vector<T> cols(g.patch() * g.columns());
  detail::im2col(input.raw(), g, cols.data());
  std::vector<T> prod(cout * g.columns());
  detail::gemm<T>(false, false, cout, g.columns(), g.patch(), kernels.raw(), cols.data(),
                  prod.data(), false);
  Tensor<T> out({g.batch, cout, g.oh, g.ow});
  detail::channels_to_batch_major(prod.data(), cout, g.batch, g.positions(), out.raw());
  out.require_finite("crosscorr2d");
  return out;
}

template <typename T>
CrossCorrGrads<T> crosscorr2d_batched_grad(const Tensor<T>& input, const Tensor<T>& kernels,
                                           const Tensor<T>& grad_out, Pad2 pad, Stride2 stride) {
  const auto g = geometry<T>(input.shape(), kernels.shape(), pad, stride);
  const std::size_t cout = kernels.extent(0);
  const Shape expected{g.batch, cout, g.oh, g.ow};
  if (grad_out.shape() != expected) {
    throw DimensionError("crosscorr2d_grad: upstream gradient " + shape_string(grad_out.shape()) +
                         " does not match output " + shape_string(expected));
  }
  std::vector<T> cols(g.patch() * g.columns());
  detail::im2col(input.raw(), g, cols.data());
  std::vector<T> gout(cout * g.columns());
  detail::batch_to_channels_major(grad_out.raw(), cout, g.batch, g.positions(), gout.data());

  CrossCorrGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(kernels.shape())};
  detail::gemm<T>(false, true, cout, g.patch(), g.columns(), gout.data(), cols.data(),
                  grads.kernels.raw(), false);
  // Reuse the patch buffer for d(cols).
  detail::gemm<T>(true, false, g.patch(), g.columns(), cout, kernels.raw(), gout.data(),
                  cols.data(), false);
  detail::col2im(cols.data(), g, grads.input.raw());
  grads.input.require_finite("crosscorr2d_grad");
  grads.kernels.require_finite("crosscorr2d_grad");
  return grads;
}

template <typename T>
Tensor<T> crosscorr2d(const Tensor<T>& input, const Tensor<T>& kernels, Pad2 pad, Stride2 stride) {
  if (input.rank() != 3) {
    throw DimensionError("crosscorr2d expects input [Cin,H,W], got " + shape_string(input.shape()));
  }
  auto out = crosscorr2d_batched(input.reshaped(with_batch(input.shape())), kernels, pad, stride);
  return std::move(out).reshaped(drop_batch(out.shape()));
}

template <typename T>
CrossCorrGrads<T> crosscorr2d_grad(const Tensor<T>& input, const Tensor<T>& kernels,
                                   const Tensor<T>& grad_out, Pad2 pad, Stride2 stride) {
  if (input.rank() != 3 || grad_out.rank() != 3) {
    throw DimensionError("crosscorr2d_grad expects rank-3 input and upstream gradient");
  }
  auto grads = crosscorr2d_batched_grad(input.reshaped(with_batch(input.shape())), kernels,
                                        grad_out.reshaped(with_batch(grad_out.shape())), pad,
                                        stride);
  grads.input = std::move(grads.input).reshaped(input.shape());
  return grads;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  Tensor<T> out({a.extent(0), b.extent(1)});
  detail::gemm<T>(false, false, a.extent(0), b.extent(1), a.extent(1), a.raw(), b.raw(),
                  out.raw(), false);
  out.require_finite("matmul");
  return out;
}

namespace {

template <typename T>
T apply(ElementwiseOp op, T x, T y) {
  switch (op) {
    case ElementwiseOp::kAdd:
      return x + y;
    case ElementwiseOp::kSub:
      return x - y;
    case ElementwiseOp::kMul:
      return x * y;
    case ElementwiseOp::kMax:
      return std::max(x, y);
  }
  return x;
}

}  // namespace

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool suffix = sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
  if (!suffix) {
    throw DimensionError("elementwise: " + shape_string(sb) + " does not broadcast to " +
                         shape_string(sa));
  }
  Tensor<T> out(sa);
  const std::size_t period = b.size();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(op, a[i], b[i % period]);
  out.require_finite("elementwise");
  return out;
}

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, T b) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(op, a[i], b);
  out.require_finite("elementwise");
  return out;
}

Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f,
                                const Tensor<double>& x, double eps) {
  if (!(eps > 0)) throw InputError("finite_diff_grad: eps must be positive");
  Tensor<double> grad(x.shape());
  Tensor<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value at element " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2 * eps);
  }
  return grad;
}

#define IQNET_INSTANTIATE(T)                                                                    \
  template Tensor<T> crosscorr2d(const Tensor<T>&, const Tensor<T>&, Pad2, Stride2);            \
  template CrossCorrGrads<T> crosscorr2d_grad(const Tensor<T>&, const Tensor<T>&,               \
                                              const Tensor<T>&, Pad2, Stride2);                 \
  template Tensor<T> crosscorr2d_batched(const Tensor<T>&, const Tensor<T>&, Pad2, Stride2);    \
  template CrossCorrGrads<T> crosscorr2d_batched_grad(const Tensor<T>&, const Tensor<T>&,       \
                                                      const Tensor<T>&, Pad2, Stride2);         \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> elementwise(ElementwiseOp, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> elementwise(ElementwiseOp, const Tensor<T>&, T);

IQNET_INSTANTIATE(float)
IQNET_INSTANTIATE(double)
#undef IQNET_INSTANTIATE

}  // namespace iqnet
