#pragma once

// Reference implementations used only as test oracles. They are written for
// clarity rather than speed and share no code with the library kernels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "iqnet/rng.hpp"
#include "iqnet/tensor.hpp"

namespace iqnet::oracle {

/// Sliding dot product with explicit bounds checks, [Cin,H,W] x [Cout,Cin,kh,kw].
inline Tensor<double> naive_crosscorr(const Tensor<double>& in, const Tensor<double>& k, std::size_t ph,
                                      std::size_t pw, std::size_t sh, std::size_t sw) {
  const std::size_t cin = in.extent(0), h = in.extent(1), w = in.extent(2);
  const std::size_t cout = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  const std::size_t ho = (h + 2 * ph - kh) / sh + 1, wo = (w + 2 * pw - kw) / sw + 1;
  Tensor<double> out({cout, ho, wo});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t x = 0; x < wo; ++x) {
        double s = 0;
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long yy = static_cast<long>(y * sh + i) - static_cast<long>(ph);
              const long xx = static_cast<long>(x * sw + j) - static_cast<long>(pw);
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
              s += in.at(c, yy, xx) * k.at(o, c, i, j);
            }
        out.at(o, y, x) = s;
      }
  return out;
}

inline Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor<double> out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += a.at(i, t) * b.at(t, j);
      out.at(i, j) = s;
    }
  return out;
}

/// Complex convolution evaluated on std::complex values: x [Cin,2,N],
/// weights [Cout,Cin,2,m], bias [Cout,2].
inline Tensor<double> native_complex_conv(const Tensor<double>& x, const Tensor<double>& weights,
                                          const Tensor<double>& bias, std::size_t pad, std::size_t stride) {
  using C = std::complex<double>;
  const std::size_t cin = x.extent(0), n = x.extent(2);
  const std::size_t cout = weights.extent(0), m = weights.extent(3);
  const std::size_t no = (n + 2 * pad - m) / stride + 1;
  std::vector<std::vector<C>> z(cin, std::vector<C>(n + 2 * pad));
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t t = 0; t < n; ++t) z[c][t + pad] = C(x.at(c, 0, t), x.at(c, 1, t));
  Tensor<double> out({cout, 2, no});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t t = 0; t < no; ++t) {
      C acc(bias.at(o, 0), bias.at(o, 1));
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t j = 0; j < m; ++j) acc += z[c][t * stride + j] * C(weights.at(o, c, 0, j), weights.at(o, c, 1, j));
      out.at(o, 0, t) = acc.real();
      out.at(o, 1, t) = acc.imag();
    }
  return out;
}

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

/// Central differences of a scalar function, one coordinate at a time.
template <typename F>
Tensor<double> numeric_grad(F&& f, Tensor<double> x, double eps = 1e-6) {
  Tensor<double> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

inline double rel_err(const Tensor<double>& a, const Tensor<double>& b) {
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    da += a[i] * a[i];
    db += b[i] * b[i];
  }
  const double den = std::max(std::sqrt(da), std::sqrt(db));
  return den < 1e-12 ? std::sqrt(num) : std::sqrt(num) / den;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace iqnet::oracle
