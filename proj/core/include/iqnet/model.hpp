#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqnet/layers.hpp"
#include "iqnet/tensor.hpp"

namespace iqnet {

enum class Family : std::uint8_t {
  kKrzyston2020 = 0,
  kResNet18 = 1,
  kResNet34 = 2,
  kDenseNet57 = 3,
  kDenseNet73 = 4,
  kDenseResNet35 = 5,
  kDenseResNet68 = 6,
};

inline constexpr Family kAllFamilies[] = {
    Family::kKrzyston2020, Family::kResNet18,      Family::kResNet34,     Family::kDenseNet57,
    Family::kDenseNet73,   Family::kDenseResNet35, Family::kDenseResNet68,
};

std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

/// Names a model: architecture family, whether its convolutions are complex,
/// and a width multiplier that scales every filter count.
///
/// Textual form: `<family>[-c][@<width>]`, e.g. `resnet18-c@0.25`.
struct ModelId {
  Family family = Family::kKrzyston2020;
  bool complex = false;
  double width = 1.0;

  std::string name() const;
  static ModelId parse(std::string_view text);

  ModelId real_counterpart() const { return {family, false, width}; }
  ModelId complex_counterpart() const { return {family, true, width}; }

  friend bool operator==(const ModelId&, const ModelId&) = default;
};

/// Whether a convolution is part of the named layer schedule or a 1x1
/// shortcut/width projection inserted to make a join type-check.
enum class LayerRole : std::uint8_t { kMain, kProjection };

struct LayerCounts {
  std::size_t main_conv = 0;
  std::size_t projection_conv = 0;
  std::size_t dense = 0;
  std::size_t complex_conv = 0;
  std::size_t real_conv = 0;

  /// Convolutions plus dense layers, excluding projections.
  std::size_t computational() const { return main_conv + dense; }
};

template <typename T>
struct NamedParameter {
  std::string name;
  Parameter<T>* param;
};

/// Directed acyclic composition of layers, stored in topological order.
/// Node 0 is the input; the last node produces the logits.
template <typename T>
class ModelGraph {
 public:
  struct Node {
    std::string name;
    std::unique_ptr<Layer<T>> layer;  // null for the input node
    std::vector<std::size_t> inputs;
    LayerRole role = LayerRole::kMain;
  };

  ModelGraph(ModelId id, std::size_t num_classes, Shape input_shape);

  ModelGraph(ModelGraph&&) noexcept = default;
  ModelGraph& operator=(ModelGraph&&) noexcept = default;

  static constexpr std::size_t kInputNode = 0;

  std::size_t add(std::string name, std::unique_ptr<Layer<T>> layer,
                  std::vector<std::size_t> inputs, LayerRole role = LayerRole::kMain);

  /// Batch [B, ...input_shape] -> logits [B, num_classes].
  Tensor<T> forward(const Tensor<T>& batch, Mode mode);

  /// Back-propagates d(loss)/d(logits) from the most recent forward call,
  /// accumulates parameter gradients and returns d(loss)/d(input).
  Tensor<T> backward(const Tensor<T>& grad_logits);

  void zero_grad();

  std::vector<NamedParameter<T>> parameters();
  std::vector<std::pair<std::string, Tensor<T>*>> buffers();

  std::size_t param_count() const;
  LayerCounts layer_counts() const;

  const ModelId& id() const { return id_; }
  std::size_t num_classes() const { return num_classes_; }
  const Shape& input_shape() const { return input_shape_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  ModelId id_;
  std::size_t num_classes_;
  Shape input_shape_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> last_use_;
};

/// Builds one of the named architectures for [1, 2, 128] I/Q frames.
/// Weights are drawn from `seed`; dropout masks use seeds derived from it.
template <typename T>
ModelGraph<T> build(const ModelId& id, std::size_t num_classes = 11, std::uint64_t seed = 0);

/// Every frame is one complex channel: [C=1, rows=2 (I,Q), N=128].
inline const Shape kFrameInputShape{1, 2, 128};

template <typename T>
std::size_t param_count(const ModelGraph<T>& model) {
  return model.param_count();
}

/// Weight file: magic "IQNW", u16 version, model id, named parameter and
/// buffer table with little-endian payloads, CRC32 trailer.
template <typename T>
void save_weights(ModelGraph<T>& model, const std::filesystem::path& path);

template <typename T>
ModelGraph<T> load_weights(const std::filesystem::path& path);

/// Loads into an already-built model, rejecting files whose header does not
/// name the same model id and class count.
template <typename T>
void load_weights_into(ModelGraph<T>& model, const std::filesystem::path& path);

}  // namespace iqnet
