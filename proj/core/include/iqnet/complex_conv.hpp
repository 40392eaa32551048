#pragma once

#include <cstddef>

#include "iqnet/rng.hpp"
#include "iqnet/tensor.hpp"

namespace iqnet {

/// Complex kernels for a time-axis convolution.
///
/// `weights` is [Cout, Cin, 2, m]: index 0 on axis 2 holds the real part `a`,
/// index 1 the imaginary part `b`. `bias` is [Cout, 2] (real, imaginary).
template <typename T>
struct ComplexKernelBank {
  Tensor<T> weights;
  Tensor<T> bias;

  ComplexKernelBank() = default;
  ComplexKernelBank(std::size_t cout, std::size_t cin, std::size_t m)
      : weights({cout, cin, 2, m}), bias({cout, 2}) {}

  std::size_t out_channels() const { return weights.extent(0); }
  std::size_t in_channels() const { return weights.extent(1); }
  std::size_t length() const { return weights.extent(3); }
  std::size_t param_count() const { return weights.size() + bias.size(); }

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) with fans counted over real scalars.
  void init_uniform(Rng& rng);
};

/// Complex convolution by linear combination of real cross-correlations.
///
/// Input is a complex feature map [Cin, 2, N] (or batched [B, Cin, 2, N]) whose
/// row 0 is the real/I part and row 1 the imaginary/Q part. With corr the 1-D
/// time cross-correlation (no flip, no conjugation):
///
///   R_o = sum_c corr(I_c, a_oc) - corr(Q_c, b_oc) + bias_re_o
///   G_o = sum_c corr(I_c, b_oc) + corr(Q_c, a_oc) + bias_im_o
///
/// which is the sliding complex dot product (I + jQ)(a + jb) at every lag.
/// Zero padding `pad` applies along time only.
template <typename T>
Tensor<T> complex_conv_forward(const Tensor<T>& x, const ComplexKernelBank<T>& bank,
                               std::size_t pad = 0, std::size_t stride = 1);

template <typename T>
struct ComplexConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
ComplexConvGrads<T> complex_conv_backward(const Tensor<T>& x, const ComplexKernelBank<T>& bank,
                                          const Tensor<T>& grad_out, std::size_t pad = 0,
                                          std::size_t stride = 1);

/// The same map computed with one real 2-row cross-correlation: pad the
/// [I; Q] rows with a zero row above and below, correlate with the kernel rows
/// (a, -b), and read real = r1, imaginary = r2 - r0.
template <typename T>
Tensor<T> complex_conv_forward_padded(const Tensor<T>& x, const ComplexKernelBank<T>& bank,
                                      std::size_t pad = 0, std::size_t stride = 1);

namespace testing {
/// Flips the sign of the b*Q term in the real output row. Used by the
/// self-test to prove that it detects a broken complex convolution.
void set_complex_conv_sign_fault(bool enabled);
bool complex_conv_sign_fault();
}  // namespace testing

}  // namespace iqnet
