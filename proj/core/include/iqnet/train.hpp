#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iqnet/model.hpp"
#include "iqnet/signal.hpp"

namespace iqnet {

enum class OptimizerKind { kAdam, kSgdMomentum };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double momentum = 0.9;
  // The learning rate is multiplied by lr_decay from epoch ceil(decay_at * epochs) on.
  double decay_at = 0.75;
  double lr_decay = 0.1;
  std::uint64_t seed = 0;
  // Stop once the epoch mean loss has not improved for this many epochs; 0 disables.
  std::size_t patience = 0;

  void validate() const;
  double lr_for_epoch(std::size_t epoch) const;
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::size_t t = 0;
};

template <typename T>
struct SgdState {
  std::vector<Tensor<T>> velocity;
};

/// One Adam update with bias correction. State tensors are created lazily on
/// the first call and must keep matching the parameter list afterwards.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr, double beta1,
               double beta2, double eps);

/// velocity = momentum * velocity + grad; value -= lr * velocity.
template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, SgdState<T>& state, double lr, double momentum);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double lr = 0;
  double seconds = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::vector<double> batch_losses;
  bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch training on softmax cross-entropy. Every epoch visits the frames
/// in a fresh order drawn from Rng::derive(cfg.seed, {epoch}); a trailing
/// batch smaller than 2 is skipped because batch norm cannot train on it.
/// Throws DivergenceError on a non-finite loss.
template <typename T>
TrainHistory train(ModelGraph<T>& model, const IQDataset& train_set, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

struct SnrBucket {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct RunReport {
  std::string model;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<int, SnrBucket> per_snr;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> loss_curve;                   // epoch mean losses
  std::vector<double> epoch_seconds;
  std::size_t params = 0;
  double us_per_sample = 0;  // evaluation forward time per frame

  double overall_accuracy() const {
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  }
};

/// Eval-mode accuracy overall, per stored SNR and as a confusion matrix.
/// Predictions are the argmax of the logits, ties going to the lowest class.
template <typename T>
RunReport evaluate(ModelGraph<T>& model, const IQDataset& test_set, std::size_t batch_size = 256);

/// Lowest index of the largest value in each row of [B, K] logits.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits);

/// Labels of the selected frames, as ints for softmax_xent.
std::vector<int> batch_labels(const IQDataset& ds, std::span<const std::size_t> indices);

}  // namespace iqnet
