#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "iqnet/bench.hpp"
#include "iqnet/model.hpp"
#include "iqnet/signal.hpp"
#include "iqnet/train.hpp"

namespace iqnet::cli {

enum class Precision { kF32, kF64 };

Precision parse_precision(const std::string& text);
std::string precision_name(Precision p);

/// Experiment description read from a key = value file with [sections]:
///
///   [dataset]     modulations, snrs, frames_per_pair, sps, rolloff, span,
///                 impairments, max_cfo, max_clock_ppm, seed, split_ratio
///   [models]      ids
///   [train]       epochs, batch_size, optimizer, lr, beta1, beta2, momentum,
///                 decay_at, lr_decay, patience, seed, precision, eval_batch
///   [experiment]  trials, out, data
///   [bench]       reps, warmup, batch, baseline, frames
///
/// Lists are comma separated; `snrs` also accepts `first:last:step`.
/// Unknown sections or keys are rejected.
struct ExperimentConfig {
  DatasetConfig dataset;
  double split_ratio = 0.5;
  std::vector<ModelId> models;
  TrainConfig train;
  Precision precision = Precision::kF32;
  std::size_t eval_batch = 256;
  std::size_t trials = 5;
  std::filesystem::path out = "runs";
  std::filesystem::path data = "dataset.cxiq";
  BenchConfig bench;
  std::string baseline = std::string(kDefaultSpeedBaseline);
  std::size_t bench_frames = 0;  // 0 means the whole test split

  static ExperimentConfig parse(std::istream& in, const std::string& origin);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Full-size protocol defaults: every modulation, -20..18 dB, 1000 frames
/// per pair, all fourteen models, five trials.
ExperimentConfig default_config();

std::vector<int> parse_snr_list(const std::string& text);

}  // namespace iqnet::cli
