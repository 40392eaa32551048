#include "iqnet/complex_conv.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "iqnet/ops.hpp"
#include "kernels.hpp"

namespace iqnet {

namespace testing {
namespace {
std::atomic<bool> g_sign_fault{false};
}
void set_complex_conv_sign_fault(bool enabled) { g_sign_fault.store(enabled); }
bool complex_conv_sign_fault() { return g_sign_fault.load(); }
}  // namespace testing

template <typename T>
void ComplexKernelBank<T>::init_uniform(Rng& rng) {
  const double fan_in = static_cast<double>(in_channels() * 2 * length());
  const double fan_out = static_cast<double>(out_channels() * 2 * length());
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : weights.data()) v = static_cast<T>(rng.uniform(-limit, limit));
  bias.fill(T{0});
}

namespace {

struct Batched {
  bool batched;
  Shape shape;  // always rank 4
};

Batched as_batched(const Shape& s, const char* what) {
  if (s.size() == 3) return {false, {1, s[0], s[1], s[2]}};
  if (s.size() == 4) return {true, s};
  throw DimensionError(std::string(what) + ": expected complex feature map [C,2,N] or [B,C,2,N], got " +
                       shape_string(s));
}

template <typename T>
detail::ConvGeometry geometry(const Shape& x, const ComplexKernelBank<T>& bank, std::size_t pad,
                              std::size_t stride, const char* what) {
  if (x[2] != 2) {
    throw DimensionError(std::string(what) + ": complex feature map needs exactly 2 rows, got " +
                         shape_string(x));
  }
  if (bank.weights.rank() != 4 || bank.weights.extent(2) != 2 || bank.bias.rank() != 2 ||
      bank.bias.extent(0) != bank.out_channels() || bank.bias.extent(1) != 2) {
    throw DimensionError(std::string(what) + ": malformed kernel bank " +
                         shape_string(bank.weights.shape()) + " / " +
                         shape_string(bank.bias.shape()));
  }
  if (x[1] != bank.in_channels()) {
    throw DimensionError(std::string(what) + ": input has " + std::to_string(x[1]) +
                         " channels, kernels expect " + std::to_string(bank.in_channels()));
  }
  detail::ConvGeometry g{};
  g.batch = x[0];
  g.cin = x[1];
  g.h = 2;
  g.w = x[3];
  g.kh = 2;
  g.kw = bank.length();
  g.ph = 0;
  g.pw = pad;
  g.sh = 1;
  g.sw = stride;
  g.oh = 1;
  g.ow = conv_out_extent(g.w, g.kw, pad, stride);
  return g;
}

/// Stacked real matrix [2*Cout, Cin*2*m]. Rows [0, Cout) produce the real
/// output (a on I taps, -b on Q taps); rows [Cout, 2*Cout) the imaginary
/// output (b on I taps, a on Q taps).
template <typename T>
std::vector<T> stacked_kernels(const ComplexKernelBank<T>& bank, bool sign_fault) {
  const std::size_t cout = bank.out_channels();
  const std::size_t cin = bank.in_channels();
  const std::size_t m = bank.length();
  const std::size_t k = cin * 2 * m;
  std::vector<T> w(2 * cout * k);
  const T* src = bank.weights.raw();
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t c = 0; c < cin; ++c) {
      const T* a = src + ((o * cin + c) * 2 + 0) * m;
      const T* b = src + ((o * cin + c) * 2 + 1) * m;
      T* re_i = w.data() + o * k + (c * 2 + 0) * m;
      T* re_q = w.data() + o * k + (c * 2 + 1) * m;
      T* im_i = w.data() + (cout + o) * k + (c * 2 + 0) * m;
      T* im_q = w.data() + (cout + o) * k + (c * 2 + 1) * m;
      for (std::size_t i = 0; i < m; ++i) {
        re_i[i] = a[i];
        re_q[i] = sign_fault ? b[i] : -b[i];
        im_i[i] = b[i];
        im_q[i] = a[i];
      }
    }
  }
  return w;
}

}  // namespace

template <typename T>
Tensor<T> complex_conv_forward(const Tensor<T>& x, const ComplexKernelBank<T>& bank,
                               std::size_t pad, std::size_t stride) {
  const auto bx = as_batched(x.shape(), "complex_conv_forward");
  const auto g = geometry(bx.shape, bank, pad, stride, "complex_conv_forward");
  const std::size_t cout = bank.out_channels();
  const std::size_t cols_n = g.columns();

  std::vector<T> cols(g.patch() * cols_n);
  detail::im2col(x.raw(), g, cols.data());
  const auto w = stacked_kernels(bank, testing::complex_conv_sign_fault());
  std::vector<T> prod(2 * cout * cols_n);
  detail::gemm<T>(false, false, 2 * cout, cols_n, g.patch(), w.data(), cols.data(), prod.data(),
                  false);

  Tensor<T> out({g.batch, cout, 2, g.ow});
  const T* bias = bank.bias.raw();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      const T* re = prod.data() + o * cols_n + b * g.ow;
      const T* im = prod.data() + (cout + o) * cols_n + b * g.ow;
      T* dst = out.raw() + (b * cout + o) * 2 * g.ow;
      for (std::size_t t = 0; t < g.ow; ++t) {
        dst[t] = re[t] + bias[2 * o];
        dst[g.ow + t] = im[t] + bias[2 * o + 1];
      }
    }
  }
  out.require_finite("complex_conv_forward");
  if (!bx.batched) return std::move(out).reshaped({cout, 2, g.ow});
  return out;
}

template <typename T>
ComplexConvGrads<T> complex_conv_backward(const Tensor<T>& x, const ComplexKernelBank<T>& bank,
                                          const Tensor<T>& grad_out, std::size_t pad,
                                          std::size_t stride) {
  const auto bx = as_batched(x.shape(), "complex_conv_backward");
  const auto g = geometry(bx.shape, bank, pad, stride, "complex_conv_backward");
  const std::size_t cout = bank.out_channels();
  const std::size_t cin = bank.in_channels();
  const std::size_t m = bank.length();
  const std::size_t cols_n = g.columns();
  const Shape expected = bx.batched ? Shape{g.batch, cout, 2, g.ow} : Shape{cout, 2, g.ow};
  if (grad_out.shape() != expected) {
    throw DimensionError("complex_conv_backward: upstream gradient " +
                         shape_string(grad_out.shape()) + " does not match output " +
                         shape_string(expected));
  }

  // Upstream gradient in stacked row layout [2*Cout, B*N'].
  std::vector<T> gstack(2 * cout * cols_n);
  ComplexConvGrads<T> grads{Tensor<T>(x.shape()), Tensor<T>(bank.weights.shape()),
                            Tensor<T>(bank.bias.shape())};
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      const T* src = grad_out.raw() + (b * cout + o) * 2 * g.ow;
      T* re = gstack.data() + o * cols_n + b * g.ow;
      T* im = gstack.data() + (cout + o) * cols_n + b * g.ow;
      for (std::size_t t = 0; t < g.ow; ++t) {
        re[t] = src[t];
        im[t] = src[g.ow + t];
      }
    }
  }
  // Bias gradient: reduce per channel in (batch, time) order.
  for (std::size_t o = 0; o < cout; ++o) {
    T sre = 0;
    T sim = 0;
    for (std::size_t j = 0; j < cols_n; ++j) {
      sre += gstack[o * cols_n + j];
      sim += gstack[(cout + o) * cols_n + j];
    }
    grads.bias[2 * o] = sre;
    grads.bias[2 * o + 1] = sim;
  }

  std::vector<T> cols(g.patch() * cols_n);
  detail::im2col(x.raw(), g, cols.data());
  const std::size_t k = g.patch();
  std::vector<T> gw(2 * cout * k);
  detail::gemm<T>(false, true, 2 * cout, k, cols_n, gstack.data(), cols.data(), gw.data(), false);

  // Fold the stacked gradient back onto (a, b): a feeds re_i and im_q,
  // b feeds -re_q and im_i.
  T* dw = grads.weights.raw();
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t c = 0; c < cin; ++c) {
      const T* re_i = gw.data() + o * k + (c * 2 + 0) * m;
      const T* re_q = gw.data() + o * k + (c * 2 + 1) * m;
      const T* im_i = gw.data() + (cout + o) * k + (c * 2 + 0) * m;
      const T* im_q = gw.data() + (cout + o) * k + (c * 2 + 1) * m;
      T* da = dw + ((o * cin + c) * 2 + 0) * m;
      T* db = dw + ((o * cin + c) * 2 + 1) * m;
      for (std::size_t i = 0; i < m; ++i) {
        da[i] = re_i[i] + im_q[i];
        db[i] = im_i[i] - re_q[i];
      }
    }
  }

  const auto w = stacked_kernels(bank, false);
  detail::gemm<T>(true, false, k, cols_n, 2 * cout, w.data(), gstack.data(), cols.data(), false);
  detail::col2im(cols.data(), g, grads.input.raw());

  grads.input.require_finite("complex_conv_backward");
  grads.weights.require_finite("complex_conv_backward");
  return grads;
}

template <typename T>
Tensor<T> complex_conv_forward_padded(const Tensor<T>& x, const ComplexKernelBank<T>& bank,
                                      std::size_t pad, std::size_t stride) {
  const auto bx = as_batched(x.shape(), "complex_conv_forward_padded");
  const auto g = geometry(bx.shape, bank, pad, stride, "complex_conv_forward_padded");
  const std::size_t cout = bank.out_channels();
  const std::size_t cin = bank.in_channels();
  const std::size_t m = bank.length();

  Tensor<T> kernels({cout, cin, 2, m});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t i = 0; i < m; ++i) {
        kernels.at(o, c, 0, i) = bank.weights.at(o, c, 0, i);
        kernels.at(o, c, 1, i) = -bank.weights.at(o, c, 1, i);
      }
    }
  }
  const Tensor<T> xb = x.reshaped(bx.shape);
  // Vertical padding of one row gives rows r0, r1, r2.
  const Tensor<T> r = crosscorr2d_batched(xb, kernels, Pad2{1, pad}, Stride2{1, stride});
  Tensor<T> out({g.batch, cout, 2, g.ow});
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t t = 0; t < g.ow; ++t) {
        out.at(b, o, 0, t) = r.at(b, o, 1, t) + bank.bias.at(o, 0);
        out.at(b, o, 1, t) = (r.at(b, o, 2, t) - r.at(b, o, 0, t)) + bank.bias.at(o, 1);
      }
    }
  }
  if (!bx.batched) return std::move(out).reshaped({cout, 2, g.ow});
  return out;
}

template struct ComplexKernelBank<float>;
template struct ComplexKernelBank<double>;

#define IQNET_INSTANTIATE(T)                                                                     \
  template Tensor<T> complex_conv_forward(const Tensor<T>&, const ComplexKernelBank<T>&,        \
                                          std::size_t, std::size_t);                            \
  template ComplexConvGrads<T> complex_conv_backward(                                            \
      const Tensor<T>&, const ComplexKernelBank<T>&, const Tensor<T>&, std::size_t, std::size_t); \
  template Tensor<T> complex_conv_forward_padded(const Tensor<T>&, const ComplexKernelBank<T>&, \
                                                 std::size_t, std::size_t);

IQNET_INSTANTIATE(float)
IQNET_INSTANTIATE(double)
#undef IQNET_INSTANTIATE

}  // namespace iqnet
