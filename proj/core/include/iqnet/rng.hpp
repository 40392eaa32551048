#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>

namespace iqnet {

/// Counter-based random number generator.
///
/// Output `n` is `splitmix64_mix(seed + (n + 1) * 0x9E3779B97F4A7C15)`, i.e. the
/// SplitMix64 sequence written as a pure function of (seed, counter). The
/// integer stream is therefore identical on every platform. Floating point
/// draws are built only from that stream and IEEE arithmetic plus `log`,
/// `sqrt`, `cos` (normal draws), so they are stable wherever libm agrees.
///
/// Distributions from <random> are deliberately not used: their algorithms
/// are implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Next raw 64-bit value.
  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix(seed_ + counter_ * kGamma);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_int(std::uint64_t n) noexcept;

  /// Standard normal draw (Box-Muller, one value per call).
  double normal() noexcept;

  /// Fisher-Yates shuffle of `items` driven by this generator.
  template <typename U>
  void shuffle(std::span<U> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Deterministic child seed from a parent seed and a tuple of keys.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace iqnet
