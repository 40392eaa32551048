// Kernel and model throughput. Run with --benchmark_counters_tabular=true
// for a compact table.

#include <benchmark/benchmark.h>

#include <numeric>

#include "iqnet/complex_conv.hpp"
#include "iqnet/model.hpp"
#include "iqnet/ops.hpp"
#include "iqnet/signal.hpp"

namespace {

using namespace iqnet;

template <typename T>
Tensor<T> noise(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-1, 1));
  return t;
}

// [B, C, 2, 128] feature maps through one complex layer, two ways.
void BM_ComplexConv(benchmark::State& state, bool padded) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 3;
  Rng rng(1);
  ComplexKernelBank<float> bank(c, c, m);
  bank.init_uniform(rng);
  const auto x = noise<float>({8, c, 2, 128}, 2);
  for (auto _ : state) {
    auto y = padded ? complex_conv_forward_padded(x, bank, 1, 1) : complex_conv_forward(x, bank, 1, 1);
    benchmark::DoNotOptimize(y.raw());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK_CAPTURE(BM_ComplexConv, linear_combination, false)->Arg(4)->Arg(16)->Arg(32);
BENCHMARK_CAPTURE(BM_ComplexConv, padded_realization, true)->Arg(4)->Arg(16)->Arg(32);

void BM_ComplexConvBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  ComplexKernelBank<float> bank(c, c, 3);
  bank.init_uniform(rng);
  const auto x = noise<float>({8, c, 2, 128}, 4);
  const auto g = noise<float>({8, c, 2, 128}, 5);
  for (auto _ : state) {
    auto grads = complex_conv_backward(x, bank, g, 1, 1);
    benchmark::DoNotOptimize(grads.input.raw());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ComplexConvBackward)->Arg(4)->Arg(16);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise<float>({n, n}, 6);
  const auto b = noise<float>({n, n}, 7);
  for (auto _ : state) {
    auto c = matmul(a, b);
    benchmark::DoNotOptimize(c.raw());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * static_cast<double>(n * n * n) * state.iterations(),
                                                 benchmark::Counter::kIsRate, benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

// Eval-mode inference over a batch of generated frames, per model.
void BM_ModelForward(benchmark::State& state, const char* name) {
  auto model = build<float>(ModelId::parse(name), 11, 1);
  auto cfg = DatasetConfig::full();
  cfg.snrs_db = {10};
  cfg.frames_per_pair = 3;
  const auto ds = generate_dataset(cfg);
  std::vector<std::size_t> idx(32);
  std::iota(idx.begin(), idx.end(), 0);
  const auto x = make_batch<float>(ds, idx);
  for (auto _ : state) {
    auto logits = model.forward(x, Mode::kEval);
    benchmark::DoNotOptimize(logits.raw());
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK_CAPTURE(BM_ModelForward, krzyston2020, "krzyston2020")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ModelForward, krzyston2020_c, "krzyston2020-c")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ModelForward, resnet18_w025, "resnet18@0.25")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ModelForward, resnet18_c_w025, "resnet18-c@0.25")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ModelForward, denseresnet35_w025, "denseresnet35@0.25")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ModelForward, denseresnet35_c_w025, "denseresnet35-c@0.25")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
