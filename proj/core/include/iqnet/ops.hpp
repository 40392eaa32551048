#pragma once

#include <cstddef>
#include <functional>

#include "iqnet/tensor.hpp"

namespace iqnet {

struct Pad2 {
  std::size_t h = 0;
  std::size_t w = 0;
};

struct Stride2 {
  std::size_t h = 1;
  std::size_t w = 1;
};

/// Output extent of a zero-padded sliding window.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t pad, std::size_t stride);

/// Deep-learning style "convolution": a sliding dot product with no kernel flip.
///
///   out[o, y, x] = sum_{c,i,j} in[c, y*sh + i - ph, x*sw + j - pw] * k[o, c, i, j]
///
/// Input is [Cin, H, W], kernels [Cout, Cin, kh, kw]; out-of-range input reads as 0.
template <typename T>
Tensor<T> crosscorr2d(const Tensor<T>& input, const Tensor<T>& kernels, Pad2 pad = {},
                      Stride2 stride = {});

template <typename T>
struct CrossCorrGrads {
  Tensor<T> input;
  Tensor<T> kernels;
};

/// Exact adjoint of crosscorr2d for the upstream gradient `grad_out`.
template <typename T>
CrossCorrGrads<T> crosscorr2d_grad(const Tensor<T>& input, const Tensor<T>& kernels,
                                   const Tensor<T>& grad_out, Pad2 pad = {}, Stride2 stride = {});

/// Batched forms: input [B, Cin, H, W], output [B, Cout, H', W'].
template <typename T>
Tensor<T> crosscorr2d_batched(const Tensor<T>& input, const Tensor<T>& kernels, Pad2 pad = {},
                              Stride2 stride = {});

template <typename T>
CrossCorrGrads<T> crosscorr2d_batched_grad(const Tensor<T>& input, const Tensor<T>& kernels,
                                           const Tensor<T>& grad_out, Pad2 pad = {},
                                           Stride2 stride = {});

/// [M, K] x [K, N] -> [M, N].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

enum class ElementwiseOp { kAdd, kSub, kMul, kMax };

/// Pointwise op. `b` must have the shape of `a` or of a trailing suffix of
/// `a`'s shape (bias-style broadcast).
template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, T b);

/// Central finite difference gradient of a scalar function, element by element.
Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f,
                                const Tensor<double>& x, double eps = 1e-5);

}  // namespace iqnet
