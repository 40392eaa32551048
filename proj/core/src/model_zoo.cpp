#include <array>
#include <cmath>
#include <string>

#include "iqnet/model.hpp"

namespace iqnet {

namespace {

/// Tracks the activation flowing through a builder: graph node plus the
/// [channels, rows, time] extents of one sample.
struct Act {
  std::size_t node;
  std::size_t channels;
  std::size_t rows;
  std::size_t time;
};

template <typename T>
class Builder {
 public:
  Builder(ModelGraph<T>& graph, bool complex, double width, std::uint64_t seed)
      : g_(graph), complex_(complex), width_(width), seed_(seed), rng_(seed) {}

  Act input() const { return {ModelGraph<T>::kInputNode, 1, 2, 128}; }

  std::size_t scaled(std::size_t c) const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c * width_)));
  }

  /// Time-axis convolution with "same" padding. In complex variants the layer
  /// is complex and keeps two rows; otherwise the real kernel spans every
  /// incoming row, so the first real convolution collapses I/Q into one row.
  Act conv(const std::string& name, const Act& x, std::size_t cout, std::size_t m,
           std::size_t stride = 1, LayerRole role = LayerRole::kMain, bool allow_complex = true) {
    const std::size_t pad = (m - 1) / 2;
    const std::size_t time = (x.time + 2 * pad - m) / stride + 1;
    if (complex_ && allow_complex) {
      const auto n = g_.add(name, std::make_unique<ComplexConv<T>>(x.channels, cout, m, pad, stride, rng_),
                            {x.node}, role);
      return {n, cout, 2, time};
    }
    const auto n = g_.add(
        name, std::make_unique<RealConv<T>>(x.channels, cout, x.rows, m, pad, stride, rng_),
        {x.node}, role);
    return {n, cout, 1, time};
  }

  Act bn(const std::string& name, const Act& x, LayerRole role = LayerRole::kMain) {
    return same(x, g_.add(name, std::make_unique<BatchNorm<T>>(x.channels * x.rows), {x.node}, role));
  }

  Act relu(const std::string& name, const Act& x) {
    return same(x, g_.add(name, std::make_unique<Relu<T>>(), {x.node}));
  }

  Act add(const std::string& name, const Act& a, const Act& b) {
    return same(a, g_.add(name, std::make_unique<ResidualAdd<T>>(), {a.node, b.node}));
  }

  Act concat(const std::string& name, const std::vector<Act>& xs) {
    if (xs.size() == 1) return xs.front();
    std::vector<std::size_t> nodes;
    std::size_t channels = 0;
    for (const auto& x : xs) {
      nodes.push_back(x.node);
      channels += x.channels;
    }
    const auto n = g_.add(name, std::make_unique<Concat<T>>(xs.size()), std::move(nodes));
    return {n, channels, xs.front().rows, xs.front().time};
  }

  Act avgpool(const std::string& name, const Act& x, std::size_t width) {
    const auto n = g_.add(name, std::make_unique<AvgPoolTime<T>>(width, width), {x.node});
    return {n, x.channels, x.rows, (x.time - width) / width + 1};
  }

  /// [B, C, rows, N] -> [B, C*rows]; the returned Act has time 1 and rows 1.
  Act global_pool(const std::string& name, const Act& x) {
    const auto n = g_.add(name, std::make_unique<GlobalAvgPoolTime<T>>(), {x.node});
    return {n, x.channels * x.rows, 1, 1};
  }

  Act flatten(const std::string& name, const Act& x) {
    const auto n = g_.add(name, std::make_unique<Flatten<T>>(), {x.node});
    return {n, x.channels * x.rows * x.time, 1, 1};
  }

  Act dense(const std::string& name, const Act& x, std::size_t out) {
    const auto n = g_.add(name, std::make_unique<Dense<T>>(x.channels, out, rng_), {x.node});
    return {n, out, 1, 1};
  }

  Act dropout(const std::string& name, const Act& x, double p) {
    const auto seed = Rng::derive(seed_, {0xD0, g_.nodes().size()});
    return same(x, g_.add(name, std::make_unique<Dropout<T>>(p, seed), {x.node}));
  }

 private:
  static Act same(const Act& x, std::size_t node) { return {node, x.channels, x.rows, x.time}; }

  ModelGraph<T>& g_;
  bool complex_;
  double width_;
  std::uint64_t seed_;
  Rng rng_;
};

// Two conv + two dense layers; in the complex variant only the first
// convolution is complex, and the second consumes both of its rows.
template <typename T>
void build_krzyston(Builder<T>& b, std::size_t num_classes) {
  Act x = b.input();
  x = b.conv("conv1", x, b.scaled(256), 3);
  x = b.relu("relu1", x);
  x = b.conv("conv2", x, b.scaled(80), 3, 1, LayerRole::kMain, /*allow_complex=*/false);
  x = b.relu("relu2", x);
  x = b.flatten("flatten", x);
  x = b.dense("dense1", x, b.scaled(256));
  x = b.relu("relu3", x);
  x = b.dropout("dropout", x, 0.5);
  b.dense("dense2", x, num_classes);
}

template <typename T>
Act basic_block(Builder<T>& b, const std::string& p, const Act& x, std::size_t cout,
                std::size_t stride, std::size_t m = 3) {
  Act y = b.conv(p + ".conv1", x, cout, m, stride);
  y = b.bn(p + ".bn1", y);
  y = b.relu(p + ".relu1", y);
  y = b.conv(p + ".conv2", y, cout, m);
  y = b.bn(p + ".bn2", y);
  Act shortcut = x;
  if (stride != 1 || x.channels != cout || x.rows != y.rows) {
    shortcut = b.conv(p + ".proj", x, cout, 1, stride, LayerRole::kProjection);
    shortcut = b.bn(p + ".proj_bn", shortcut, LayerRole::kProjection);
  }
  y = b.add(p + ".add", y, shortcut);
  return b.relu(p + ".relu2", y);
}

template <typename T>
void build_resnet(Builder<T>& b, const std::array<std::size_t, 4>& blocks, std::size_t num_classes) {
  Act x = b.input();
  x = b.conv("stem.conv", x, b.scaled(64), 7, 2);
  x = b.bn("stem.bn", x);
  x = b.relu("stem.relu", x);
  const std::array<std::size_t, 4> widths{64, 128, 256, 512};
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t k = 0; k < blocks[s]; ++k) {
      const std::size_t stride = (s > 0 && k == 0) ? 2 : 1;
      x = basic_block(b, "stage" + std::to_string(s + 1) + ".block" + std::to_string(k), x,
                      b.scaled(widths[s]), stride);
    }
  }
  x = b.global_pool("pool", x);
  b.dense("fc", x, num_classes);
}

template <typename T>
void build_densenet(Builder<T>& b, const std::array<std::size_t, 4>& blocks, std::size_t num_classes) {
  const std::size_t growth = b.scaled(12);
  Act x = b.input();
  x = b.conv("stem.conv", x, 2 * growth, 7);
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string bp = "block" + std::to_string(s + 1);
    for (std::size_t k = 0; k < blocks[s]; ++k) {
      const std::string p = bp + ".layer" + std::to_string(k);
      Act y = b.bn(p + ".bn1", x);
      y = b.relu(p + ".relu1", y);
      y = b.conv(p + ".conv1", y, 4 * growth, 1);
      y = b.bn(p + ".bn2", y);
      y = b.relu(p + ".relu2", y);
      y = b.conv(p + ".conv2", y, growth, 3);
      x = b.concat(p + ".concat", {x, y});
    }
    if (s < 3) {
      const std::string p = "transition" + std::to_string(s + 1);
      Act y = b.bn(p + ".bn", x);
      y = b.relu(p + ".relu", y);
      y = b.conv(p + ".conv", y, std::max<std::size_t>(1, x.channels / 2), 1);
      x = b.avgpool(p + ".pool", y, 2);
    }
  }
  x = b.bn("final.bn", x);
  x = b.relu("final.relu", x);
  x = b.global_pool("pool", x);
  b.dense("fc", x, num_classes);
}

// Blocks of four residual units; every block reads the concatenation of all
// earlier block outputs, narrowed back to the block width by a 1x1 projection.
template <typename T>
void build_denseresnet(Builder<T>& b, const std::vector<std::size_t>& kernels,
                       std::size_t num_classes) {
  const std::size_t width = b.scaled(64);
  std::vector<Act> outputs;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const std::string p = "block" + std::to_string(k + 1);
    Act x = outputs.empty() ? b.input() : b.concat(p + ".concat", outputs);
    if (outputs.empty() || x.channels != width) {
      x = b.conv(p + ".proj", x, width, 1, 1, LayerRole::kProjection);
      x = b.bn(p + ".proj_bn", x, LayerRole::kProjection);
      x = b.relu(p + ".proj_relu", x);
    }
    for (std::size_t u = 0; u < 4; ++u) {
      x = basic_block(b, p + ".unit" + std::to_string(u), x, width, 1, kernels[k]);
    }
    outputs.push_back(x);
  }
  Act x = b.concat("head.concat", outputs);
  x = b.global_pool("pool", x);
  x = b.dense("fc1", x, b.scaled(128));
  x = b.relu("fc1.relu", x);
  b.dense("fc2", x, num_classes);
}

}  // namespace

template <typename T>
ModelGraph<T> build(const ModelId& id, std::size_t num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("models need at least 2 classes");
  if (!(id.width > 0) || !std::isfinite(id.width)) throw ConfigError("width multiplier must be positive");
  ModelGraph<T> graph(id, num_classes, kFrameInputShape);
  Builder<T> b(graph, id.complex, id.width, Rng::derive(seed, {static_cast<std::uint64_t>(id.family)}));
  switch (id.family) {
    case Family::kKrzyston2020:
      build_krzyston(b, num_classes);
      break;
    case Family::kResNet18:
      build_resnet(b, {2, 2, 2, 2}, num_classes);
      break;
    case Family::kResNet34:
      build_resnet(b, {3, 4, 6, 3}, num_classes);
      break;
    case Family::kDenseNet57:
      build_densenet(b, {6, 6, 7, 7}, num_classes);
      break;
    case Family::kDenseNet73:
      build_densenet(b, {8, 8, 9, 9}, num_classes);
      break;
    case Family::kDenseResNet35:
      build_denseresnet(b, {7, 5, 3}, num_classes);
      break;
    case Family::kDenseResNet68:
      build_denseresnet(b, {7, 7, 5, 5, 3, 3}, num_classes);
      break;
    default:
      throw ConfigError("unknown model family");
  }
  return graph;
}

template ModelGraph<float> build(const ModelId&, std::size_t, std::uint64_t);
template ModelGraph<double> build(const ModelId&, std::size_t, std::uint64_t);

}  // namespace iqnet
