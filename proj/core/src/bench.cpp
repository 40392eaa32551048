#include "iqnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

namespace iqnet {

void BenchConfig::validate() const {
  if (reps < 5) throw ConfigError("bench: at least 5 repetitions are required");
  if (warmup < 1) throw ConfigError("bench: at least 1 warmup pass is required");
  if (batch == 0) throw ConfigError("bench: batch size must be positive");
  if (threads == 0) throw ConfigError("bench: thread count must be positive");
}

void summarize_reps(SpeedReport& r) {
  if (r.rep_us.empty()) throw InputError("speed report has no repetitions");
  auto sorted = r.rep_us;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.min_us = sorted.front();
  r.median_us = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.mean_us = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
}

template <typename T>
SpeedReport measure_inference(ModelGraph<T>& model, const IQDataset& test_set, const BenchConfig& cfg) {
  cfg.validate();
  if (test_set.empty()) throw InputError("measure_inference: empty test set");

  // Batches are assembled once so only the forward passes are timed.
  std::vector<Tensor<T>> batches;
  for (std::size_t start = 0; start < test_set.size(); start += cfg.batch) {
    const std::size_t count = std::min(cfg.batch, test_set.size() - start);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), start);
    batches.push_back(make_batch<T>(test_set, idx));
  }

  T sink = 0;
  auto pass = [&] {
    for (const auto& b : batches) sink += model.forward(b, Mode::kEval)[0];
  };
  for (std::size_t i = 0; i < cfg.warmup; ++i) pass();

  SpeedReport r;
  r.model = model.id().name();
  r.batch = cfg.batch;
  r.reps = cfg.reps;
  r.warmup = cfg.warmup;
  r.frames = test_set.size();
  r.threads = cfg.threads;
  for (std::size_t i = 0; i < cfg.reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    pass();
    const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    r.rep_us.push_back(us / static_cast<double>(test_set.size()));
  }
  if (!std::isfinite(static_cast<double>(sink))) throw NumericError("measure_inference: non-finite logits");
  summarize_reps(r);
  return r;
}

void normalize_speeds(std::span<SpeedReport> reports, std::string_view baseline) {
  const auto it = std::find_if(reports.begin(), reports.end(), [&](const SpeedReport& r) { return r.model == baseline; });
  if (it == reports.end()) throw InputError("speed baseline " + std::string(baseline) + " was not measured");
  const double base = it->median_us;
  if (!(base > 0)) throw NumericError("speed baseline has a non-positive median");
  for (auto& r : reports) r.normalized = r.median_us / base;
}

std::vector<ParamProfile> profile_params(std::span<const ModelId> ids, std::size_t num_classes) {
  std::vector<ParamProfile> out;
  for (const auto& id : ids) {
    const auto params = build<float>(id, num_classes).param_count();
    const auto real = id.complex ? build<float>(id.real_counterpart(), num_classes).param_count() : params;
    out.push_back({id.name(), params, static_cast<double>(params) / static_cast<double>(real)});
  }
  return out;
}

std::string environment_stamp(std::size_t threads) {
  std::string cpu = "unknown";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  return "cpu=" + cpu + ";threads=" + std::to_string(threads);
}

template SpeedReport measure_inference(ModelGraph<float>&, const IQDataset&, const BenchConfig&);
template SpeedReport measure_inference(ModelGraph<double>&, const IQDataset&, const BenchConfig&);

}  // namespace iqnet
