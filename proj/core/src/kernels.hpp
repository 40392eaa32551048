#pragma once

// Internal building blocks shared by the convolution and dense code paths.

#include <cstddef>

#include <Eigen/Core>

namespace iqnet::detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using MapConstMat = Eigen::Map<const RowMat<T>>;

/// C = op(A) * op(B) (+ C when accumulate). All row-major, dense.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c, bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  MapMat<T> C(c, M, N);
  // op(A) is m x k, op(B) is k x n.
  MapConstMat<T> A(a, trans_a ? K : M, trans_a ? M : K);
  MapConstMat<T> B(b, trans_b ? N : K, trans_b ? K : N);
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate) {
      C.noalias() += lhs * rhs;
    } else {
      C.noalias() = lhs * rhs;
    }
  };
  if (trans_a && trans_b) {
    run(A.transpose(), B.transpose());
  } else if (trans_a) {
    run(A.transpose(), B);
  } else if (trans_b) {
    run(A, B.transpose());
  } else {
    run(A, B);
  }
}

struct ConvGeometry {
  std::size_t batch, cin, h, w;
  std::size_t kh, kw;
  std::size_t ph, pw, sh, sw;
  std::size_t oh, ow;

  std::size_t patch() const { return cin * kh * kw; }
  std::size_t positions() const { return oh * ow; }
  std::size_t columns() const { return batch * positions(); }
};

/// Unfold [B, Cin, H, W] into a [Cin*kh*kw, B*oh*ow] patch matrix.
template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* cols) {
  const std::size_t ncols = g.columns();
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = cols + ((c * g.kh + i) * g.kw + j) * ncols;
        for (std::size_t b = 0; b < g.batch; ++b) {
          const T* plane = in + (b * g.cin + c) * g.h * g.w;
          T* dst = row + b * g.positions();
          for (std::size_t y = 0; y < g.oh; ++y) {
            const auto iy = static_cast<std::ptrdiff_t>(y * g.sh + i) -
                            static_cast<std::ptrdiff_t>(g.ph);
            T* drow = dst + y * g.ow;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
              for (std::size_t x = 0; x < g.ow; ++x) drow[x] = T{0};
              continue;
            }
            const T* srow = plane + static_cast<std::size_t>(iy) * g.w;
            for (std::size_t x = 0; x < g.ow; ++x) {
              const auto ix = static_cast<std::ptrdiff_t>(x * g.sw + j) -
                              static_cast<std::ptrdiff_t>(g.pw);
              drow[x] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                            ? T{0}
                            : srow[static_cast<std::size_t>(ix)];
            }
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-add a patch matrix back into [B, Cin, H, W].
/// `out` must be zeroed by the caller.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* out) {
  const std::size_t ncols = g.columns();
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = cols + ((c * g.kh + i) * g.kw + j) * ncols;
        for (std::size_t b = 0; b < g.batch; ++b) {
          T* plane = out + (b * g.cin + c) * g.h * g.w;
          const T* src = row + b * g.positions();
          for (std::size_t y = 0; y < g.oh; ++y) {
            const auto iy = static_cast<std::ptrdiff_t>(y * g.sh + i) -
                            static_cast<std::ptrdiff_t>(g.ph);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
            T* drow = plane + static_cast<std::size_t>(iy) * g.w;
            const T* srow = src + y * g.ow;
            for (std::size_t x = 0; x < g.ow; ++x) {
              const auto ix = static_cast<std::ptrdiff_t>(x * g.sw + j) -
                              static_cast<std::ptrdiff_t>(g.pw);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
              drow[static_cast<std::size_t>(ix)] += srow[x];
            }
          }
        }
      }
    }
  }
}

/// [Cout, B*P] -> [B, Cout, P]
template <typename T>
void channels_to_batch_major(const T* src, std::size_t cout, std::size_t batch, std::size_t p,
                             T* dst) {
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t b = 0; b < batch; ++b) {
      const T* s = src + o * batch * p + b * p;
      T* d = dst + (b * cout + o) * p;
      for (std::size_t t = 0; t < p; ++t) d[t] = s[t];
    }
  }
}

/// [B, Cout, P] -> [Cout, B*P]
template <typename T>
void batch_to_channels_major(const T* src, std::size_t cout, std::size_t batch, std::size_t p,
                             T* dst) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      const T* s = src + (b * cout + o) * p;
      T* d = dst + o * batch * p + b * p;
      for (std::size_t t = 0; t < p; ++t) d[t] = s[t];
    }
  }
}

}  // namespace iqnet::detail
