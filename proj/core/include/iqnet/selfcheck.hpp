#pragma once

// Oracle and gradient checks that a built library can run against itself.
// Everything here works at 64-bit precision.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iqnet/complex_conv.hpp"
#include "iqnet/layers.hpp"

namespace iqnet::selfcheck {

struct CheckResult {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0;
  double tolerance = 0;

  bool passed() const { return max_error < tolerance; }
};

/// ||a - n|| / max(||a||, ||n||), or the plain difference norm when both are
/// below 1e-10.
double relative_error(const Tensor<double>& analytic, const Tensor<double>& numeric);

/// Sliding complex dot product evaluated with std::complex, [Cin, 2, N] in.
Tensor<double> complex_conv_reference(const Tensor<double>& x, const ComplexKernelBank<double>& bank,
                                      std::size_t pad, std::size_t stride);

using LayerFactory = std::function<std::unique_ptr<Layer<double>>()>;

/// Worst relative error between the analytic gradients of
/// sum(forward(inputs) * R) (R random, from `seed`) and central differences,
/// over every input and parameter. The factory must build identical layers
/// on every call; each finite-difference probe uses a fresh one, so layers
/// with internal randomness (dropout) see the same draws.
double layer_gradient_error(const LayerFactory& make, const std::vector<Tensor<double>>& inputs, Mode mode,
                            std::uint64_t seed);

/// Worst relative error of softmax_xent's gradient against central differences.
double softmax_xent_gradient_error(const Tensor<double>& logits, const std::vector<int>& labels);

struct Options {
  std::size_t oracle_instances = 100;
  std::size_t gradient_instances = 20;
  std::uint64_t seed = 0;
};

/// Complex-convolution oracle and padded realization, complex linearity,
/// and a finite-difference gradient check for every layer kind.
std::vector<CheckResult> run_all(const Options& options);

}  // namespace iqnet::selfcheck
