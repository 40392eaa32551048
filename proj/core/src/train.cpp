#include "iqnet/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace iqnet {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (batch_size < 2) throw ConfigError("train: batch size must be at least 2 (batch norm)");
  if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("train: learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("train: Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("train: Adam epsilon must be positive");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("train: momentum must lie in [0, 1)");
  if (!(decay_at > 0 && decay_at <= 1)) throw ConfigError("train: decay point must lie in (0, 1]");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("train: decay factor must lie in (0, 1]");
}

double TrainConfig::lr_for_epoch(std::size_t epoch) const {
  const auto decay_epoch = static_cast<std::size_t>(std::ceil(decay_at * static_cast<double>(epochs)));
  return epoch >= decay_epoch ? lr * lr_decay : lr;
}

namespace {

template <typename T>
void ensure_state(std::vector<Tensor<T>>& slots, std::span<Parameter<T>* const> params, const char* who) {
  if (slots.empty()) {
    for (auto* p : params) slots.emplace_back(p->value.shape());
    return;
  }
  if (slots.size() != params.size()) throw DimensionError(std::string(who) + ": parameter list changed size");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (slots[i].shape() != params[i]->value.shape() || params[i]->grad.shape() != params[i]->value.shape()) {
      throw DimensionError(std::string(who) + ": shape mismatch for " + params[i]->name);
    }
  }
}

}  // namespace

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr, double beta1,
               double beta2, double eps) {
  ensure_state(state.m, params, "adam_step");
  ensure_state(state.v, params, "adam_step");
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    const auto& grad = params[i]->grad;
    T* m = state.m[i].raw();
    T* v = state.v[i].raw();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = beta1 * m[k] + (1 - beta1) * g;
      const double vk = beta2 * v[k] + (1 - beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      value[k] = static_cast<T>(value[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + eps));
    }
  }
}

template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, SgdState<T>& state, double lr, double momentum) {
  ensure_state(state.velocity, params, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    const auto& grad = params[i]->grad;
    T* vel = state.velocity[i].raw();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double vk = momentum * vel[k] + grad[k];
      vel[k] = static_cast<T>(vk);
      value[k] = static_cast<T>(value[k] - lr * vk);
    }
  }
}

std::vector<int> batch_labels(const IQDataset& ds, std::span<const std::size_t> indices) {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.push_back(ds.frames.at(i).label);
  return labels;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax_rows: expected [B, K] logits");
  const std::size_t rows = logits.extent(0);
  const std::size_t k = logits.extent(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (logits[r * k + c] > logits[r * k + best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

template <typename T>
TrainHistory train(ModelGraph<T>& model, const IQDataset& train_set, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.size() < 2) throw InputError("train: need at least 2 training frames");
  for (const auto& f : train_set.frames) {
    if (f.label >= model.num_classes()) {
      throw InputError("train: label " + std::to_string(f.label) + " outside model's " +
                       std::to_string(model.num_classes()) + " classes");
    }
  }

  std::vector<Parameter<T>*> params;
  for (auto& np : model.parameters()) params.push_back(np.param);
  AdamState<T> adam;
  SgdState<T> sgd;

  TrainHistory history;
  std::vector<std::size_t> order(train_set.size());
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(Rng::derive(cfg.seed, {0xE0C4, epoch}));
    rng.shuffle(std::span<std::size_t>(order));
    const double lr = cfg.lr_for_epoch(epoch);

    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + 2 <= order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const auto x = make_batch<T>(train_set, idx);
      const auto labels = batch_labels(train_set, idx);

      const auto diverged = [&](const std::string& why) {
        return DivergenceError(static_cast<int>(epoch), static_cast<int>(batches),
                               "training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches) + ": " + why);
      };
      model.zero_grad();
      T loss{};
      try {
        const auto logits = model.forward(x, Mode::kTrain);
        auto result = softmax_xent(logits, std::span<const int>(labels));
        loss = result.loss;
        if (!std::isfinite(static_cast<double>(loss))) throw diverged("non-finite loss");
        model.backward(result.grad_logits);
      } catch (const NumericError& e) {
        // Layers refuse non-finite activations; surface that as divergence too.
        throw diverged(e.what());
      }
      if (cfg.optimizer == OptimizerKind::kAdam) {
        adam_step<T>(params, adam, lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
      } else {
        sgd_step<T>(params, sgd, lr, cfg.momentum);
      }
      history.batch_losses.push_back(static_cast<double>(loss));
      loss_sum += static_cast<double>(loss);
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(batches);
    stats.lr = lr;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (cfg.patience > 0) {
      if (stats.mean_loss < best_loss) {
        best_loss = stats.mean_loss;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        history.early_stopped = true;
        break;
      }
    }
  }
  return history;
}

template <typename T>
RunReport evaluate(ModelGraph<T>& model, const IQDataset& test_set, std::size_t batch_size) {
  if (test_set.empty()) throw InputError("evaluate: empty test set");
  if (batch_size == 0) throw ConfigError("evaluate: batch size must be positive");
  const std::size_t k = model.num_classes();
  RunReport report;
  report.model = model.id().name();
  report.class_names = test_set.class_names;
  report.params = model.param_count();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));

  std::vector<std::size_t> idx;
  double forward_seconds = 0;
  for (std::size_t start = 0; start < test_set.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, test_set.size() - start);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), start);
    const auto x = make_batch<T>(test_set, idx);
    const auto t0 = std::chrono::steady_clock::now();
    const auto logits = model.forward(x, Mode::kEval);
    forward_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto predicted = argmax_rows(logits);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& frame = test_set.frames[start + i];
      if (frame.label >= k) throw InputError("evaluate: frame label outside the model's classes");
      const bool hit = predicted[i] == frame.label;
      auto& bucket = report.per_snr[frame.snr_db];
      bucket.total += 1;
      bucket.correct += hit ? 1 : 0;
      report.total += 1;
      report.correct += hit ? 1 : 0;
      report.confusion[frame.label][static_cast<std::size_t>(predicted[i])] += 1;
    }
  }
  report.us_per_sample = forward_seconds * 1e6 / static_cast<double>(test_set.size());
  return report;
}

#define IQNET_INSTANTIATE(T)                                                                       \
  template void adam_step(std::span<Parameter<T>* const>, AdamState<T>&, double, double, double,  \
                          double);                                                                 \
  template void sgd_step(std::span<Parameter<T>* const>, SgdState<T>&, double, double);           \
  template std::vector<int> argmax_rows(const Tensor<T>&);                                         \
  template TrainHistory train(ModelGraph<T>&, const IQDataset&, const TrainConfig&,               \
                              const EpochCallback&);                                               \
  template RunReport evaluate(ModelGraph<T>&, const IQDataset&, std::size_t);

IQNET_INSTANTIATE(float)
IQNET_INSTANTIATE(double)

#undef IQNET_INSTANTIATE

}  // namespace iqnet
