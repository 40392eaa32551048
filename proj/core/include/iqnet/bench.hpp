#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqnet/model.hpp"
#include "iqnet/signal.hpp"

namespace iqnet {

struct BenchConfig {
  std::size_t reps = 5;
  std::size_t warmup = 1;
  std::size_t batch = 256;
  std::size_t threads = 1;

  void validate() const;
};

struct SpeedReport {
  std::string model;
  std::size_t batch = 0;
  std::size_t reps = 0;
  std::size_t warmup = 0;
  std::size_t frames = 0;
  std::size_t threads = 1;
  double mean_us = 0;  // per sample, over repetitions
  double median_us = 0;
  double min_us = 0;
  double normalized = 1;   // median_us / baseline median_us
  std::vector<double> rep_us;  // per-repetition microseconds per sample
};

/// Times `reps` eval-mode forward passes over the whole test set after
/// `warmup` untimed passes, using a monotonic clock.
template <typename T>
SpeedReport measure_inference(ModelGraph<T>& model, const IQDataset& test_set, const BenchConfig& cfg);

/// Fills mean/median/min from per-repetition values.
void summarize_reps(SpeedReport& report);

/// Sets every report's `normalized` to its median divided by the median of
/// the report named `baseline`. Throws InputError if the baseline is absent.
void normalize_speeds(std::span<SpeedReport> reports, std::string_view baseline);

inline constexpr std::string_view kDefaultSpeedBaseline = "krzyston2020-c";

struct ParamProfile {
  std::string model;
  std::size_t params = 0;
  double ratio = 1;  // params / params of the real counterpart (1 for real models)
};

std::vector<ParamProfile> profile_params(std::span<const ModelId> ids, std::size_t num_classes = 11);

template <typename T>
double param_ratio(const ModelGraph<T>& numerator, const ModelGraph<T>& denominator) {
  return static_cast<double>(numerator.param_count()) / static_cast<double>(denominator.param_count());
}

/// "cpu=<model name>;threads=<n>" for labelling timing artifacts.
std::string environment_stamp(std::size_t threads);

}  // namespace iqnet
