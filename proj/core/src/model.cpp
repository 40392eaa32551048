#include "iqnet/model.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "binary_io.hpp"

namespace iqnet {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kKrzyston2020: return "krzyston2020";
    case Family::kResNet18: return "resnet18";
    case Family::kResNet34: return "resnet34";
    case Family::kDenseNet57: return "densenet57";
    case Family::kDenseNet73: return "densenet73";
    case Family::kDenseResNet35: return "denseresnet35";
    case Family::kDenseResNet68: return "denseresnet68";
  }
  return "unknown";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

std::string ModelId::name() const {
  std::string s(family_name(family));
  if (complex) s += "-c";
  if (width != 1.0) {
    std::ostringstream os;
    os << width;
    s += "@" + os.str();
  }
  return s;
}

ModelId ModelId::parse(std::string_view text) {
  ModelId id;
  std::string_view rest = text;
  if (const auto at = rest.find('@'); at != std::string_view::npos) {
    const std::string w(rest.substr(at + 1));
    std::size_t used = 0;
    try {
      id.width = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size() || !(id.width > 0) || !std::isfinite(id.width)) {
      throw ConfigError("invalid width multiplier in model id '" + std::string(text) + "'");
    }
    rest = rest.substr(0, at);
  }
  if (rest.ends_with("-c")) {
    id.complex = true;
    rest.remove_suffix(2);
  }
  const auto fam = family_from_name(rest);
  if (!fam) throw ConfigError("unknown model family '" + std::string(rest) + "'");
  id.family = *fam;
  return id;
}

// -------------------------------------------------------------- ModelGraph

template <typename T>
ModelGraph<T>::ModelGraph(ModelId id, std::size_t num_classes, Shape input_shape)
    : id_(id), num_classes_(num_classes), input_shape_(std::move(input_shape)) {
  nodes_.push_back(Node{"input", nullptr, {}, LayerRole::kMain});
  last_use_.push_back(0);
}

template <typename T>
std::size_t ModelGraph<T>::add(std::string name, std::unique_ptr<Layer<T>> layer,
                               std::vector<std::size_t> inputs, LayerRole role) {
  if (!layer) throw ConfigError("ModelGraph::add: null layer");
  if (inputs.size() != layer->arity()) {
    throw ConfigError("layer " + name + " expects " + std::to_string(layer->arity()) +
                      " inputs, got " + std::to_string(inputs.size()));
  }
  for (const auto& n : nodes_) {
    if (n.name == name) throw ConfigError("duplicate layer name " + name);
  }
  const std::size_t idx = nodes_.size();
  for (std::size_t in : inputs) {
    if (in >= idx) throw ConfigError("layer " + name + " consumes a later node");
    last_use_[in] = idx;
  }
  nodes_.push_back(Node{std::move(name), std::move(layer), std::move(inputs), role});
  last_use_.push_back(idx);
  return idx;
}

template <typename T>
Tensor<T> ModelGraph<T>::forward(const Tensor<T>& batch, Mode mode) {
  if (batch.rank() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
    throw DimensionError("model " + id_.name() + " expects [B," +
                         shape_string(input_shape_).substr(1) + " input, got " +
                         shape_string(batch.shape()));
  }
  std::vector<Tensor<T>> acts(nodes_.size());
  acts[0] = batch;
  std::vector<const Tensor<T>*> ins;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    ins.clear();
    for (std::size_t in : nodes_[i].inputs) ins.push_back(&acts[in]);
    acts[i] = nodes_[i].layer->forward(std::span<const Tensor<T>* const>(ins), mode);
    for (std::size_t in : nodes_[i].inputs) {
      if (last_use_[in] == i) acts[in] = Tensor<T>();
    }
  }
  Tensor<T> out = std::move(acts.back());
  if (out.rank() != 2 || out.extent(1) != num_classes_) {
    throw DimensionError("model " + id_.name() + " produced " + shape_string(out.shape()) +
                         " instead of [B," + std::to_string(num_classes_) + "] logits");
  }
  return out;
}

template <typename T>
Tensor<T> ModelGraph<T>::backward(const Tensor<T>& grad_logits) {
  std::vector<Tensor<T>> grads(nodes_.size());
  grads.back() = grad_logits;
  for (std::size_t i = nodes_.size() - 1; i >= 1; --i) {
    if (grads[i].empty()) continue;
    auto in_grads = nodes_[i].layer->backward(grads[i]);
    grads[i] = Tensor<T>();
    const auto& inputs = nodes_[i].inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      auto& dst = grads[inputs[k]];
      if (dst.empty()) {
        dst = std::move(in_grads[k]);
      } else {
        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += in_grads[k][e];
      }
    }
  }
  return std::move(grads[0]);
}

template <typename T>
void ModelGraph<T>::zero_grad() {
  for (auto& n : nodes_) {
    if (n.layer) n.layer->zero_grad();
  }
}

template <typename T>
std::vector<NamedParameter<T>> ModelGraph<T>::parameters() {
  std::vector<NamedParameter<T>> out;
  for (auto& n : nodes_) {
    if (!n.layer) continue;
    for (auto* p : n.layer->parameters()) out.push_back({n.name + "." + p->name, p});
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> ModelGraph<T>::buffers() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (auto& n : nodes_) {
    if (!n.layer) continue;
    for (auto& [name, t] : n.layer->buffers()) out.emplace_back(n.name + "." + name, t);
  }
  return out;
}

template <typename T>
std::size_t ModelGraph<T>::param_count() const {
  std::size_t total = 0;
  for (const auto& n : nodes_) {
    if (n.layer) total += n.layer->param_count();
  }
  return total;
}

template <typename T>
LayerCounts ModelGraph<T>::layer_counts() const {
  LayerCounts c;
  for (const auto& n : nodes_) {
    if (!n.layer) continue;
    const LayerKind k = n.layer->kind();
    if (k == LayerKind::kRealConv || k == LayerKind::kComplexConv) {
      (n.role == LayerRole::kMain ? c.main_conv : c.projection_conv)++;
      (k == LayerKind::kComplexConv ? c.complex_conv : c.real_conv)++;
    } else if (k == LayerKind::kDense) {
      c.dense++;
    }
  }
  return c;
}

// ---------------------------------------------------------- Serialization

namespace {

constexpr char kWeightMagic[] = "IQNW";
constexpr std::uint16_t kWeightVersion = 1;

void put_header(detail::ByteWriter& w, const ModelId& id, std::size_t num_classes,
                std::uint8_t precision) {
  w.put_bytes(std::string_view(kWeightMagic, 4));
  w.put(kWeightVersion);
  w.put(static_cast<std::uint8_t>(id.family));
  w.put(static_cast<std::uint8_t>(id.complex ? 1 : 0));
  w.put(id.width);
  w.put(static_cast<std::uint16_t>(num_classes));
  w.put(precision);
}

struct WeightHeader {
  ModelId id;
  std::size_t num_classes;
  std::uint8_t precision;
};

WeightHeader get_header(detail::ByteReader& r) {
  if (r.get_bytes(4) != std::string_view(kWeightMagic, 4)) r.fail("bad magic");
  if (r.get<std::uint16_t>() != kWeightVersion) r.fail("unsupported version");
  WeightHeader h;
  const auto fam = r.get<std::uint8_t>();
  if (fam > static_cast<std::uint8_t>(Family::kDenseResNet68)) r.fail("unknown model family");
  h.id.family = static_cast<Family>(fam);
  h.id.complex = r.get<std::uint8_t>() != 0;
  h.id.width = r.get<double>();
  if (!(h.id.width > 0)) r.fail("invalid width multiplier");
  h.num_classes = r.get<std::uint16_t>();
  h.precision = r.get<std::uint8_t>();
  return h;
}

template <typename T>
void put_tensor(detail::ByteWriter& w, const std::string& name, std::uint8_t kind,
                const Tensor<T>& t) {
  w.put_string16(name);
  w.put(kind);
  w.put(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape()) w.put(static_cast<std::uint32_t>(e));
  for (T v : t.data()) w.put(v);
}

template <typename T>
void read_entries(detail::ByteReader& r, ModelGraph<T>& model) {
  std::map<std::string, Tensor<T>*> targets;
  for (auto& p : model.parameters()) targets[p.name] = &p.param->value;
  for (auto& [name, t] : model.buffers()) targets[name] = t;

  const auto count = r.get<std::uint32_t>();
  if (count != targets.size()) {
    r.fail("expected " + std::to_string(targets.size()) + " tensors, file has " +
           std::to_string(count));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string16();
    r.get<std::uint8_t>();  // parameter / buffer tag
    const auto rank = r.get<std::uint8_t>();
    Shape shape(rank);
    for (auto& e : shape) e = r.get<std::uint32_t>();
    auto it = targets.find(name);
    if (it == targets.end()) r.fail("unexpected tensor " + name);
    if (it->second->shape() != shape) {
      r.fail("tensor " + name + " has shape " + shape_string(shape) + ", model expects " +
             shape_string(it->second->shape()));
    }
    for (auto& v : it->second->data()) v = r.get<T>();
    targets.erase(it);
  }
  if (r.remaining() != 0) r.fail("trailing bytes after tensor table");
}

}  // namespace

template <typename T>
void save_weights(ModelGraph<T>& model, const std::filesystem::path& path) {
  detail::ByteWriter w;
  put_header(w, model.id(), model.num_classes(), static_cast<std::uint8_t>(sizeof(T)));
  auto params = model.parameters();
  auto bufs = model.buffers();
  w.put(static_cast<std::uint32_t>(params.size() + bufs.size()));
  for (auto& p : params) put_tensor(w, p.name, 0, p.param->value);
  for (auto& [name, t] : bufs) put_tensor(w, name, 1, *t);
  w.put_crc();
  w.write_file(path);
}

template <typename T>
ModelGraph<T> load_weights(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path, "weight file");
  r.verify_crc();
  const auto h = get_header(r);
  if (h.precision != sizeof(T)) {
    r.fail("stored precision is " + std::to_string(h.precision * 8) + "-bit, requested " +
           std::to_string(sizeof(T) * 8) + "-bit");
  }
  auto model = build<T>(h.id, h.num_classes);
  read_entries(r, model);
  return model;
}

template <typename T>
void load_weights_into(ModelGraph<T>& model, const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path, "weight file");
  r.verify_crc();
  const auto h = get_header(r);
  if (!(h.id == model.id()) || h.num_classes != model.num_classes()) {
    r.fail("file holds " + h.id.name() + " with " + std::to_string(h.num_classes) +
           " classes, model is " + model.id().name() + " with " +
           std::to_string(model.num_classes()));
  }
  if (h.precision != sizeof(T)) r.fail("precision mismatch");
  read_entries(r, model);
}

template class ModelGraph<float>;
template class ModelGraph<double>;
template void save_weights(ModelGraph<float>&, const std::filesystem::path&);
template void save_weights(ModelGraph<double>&, const std::filesystem::path&);
template ModelGraph<float> load_weights(const std::filesystem::path&);
template ModelGraph<double> load_weights(const std::filesystem::path&);
template void load_weights_into(ModelGraph<float>&, const std::filesystem::path&);
template void load_weights_into(ModelGraph<double>&, const std::filesystem::path&);

}  // namespace iqnet
