#include "iqnet/rng.hpp"

#include <cmath>
#include <numbers>

namespace iqnet {

namespace {
__extension__ typedef unsigned __int128 u128;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // Lemire: take the high word of a 64x64 product, reject the biased low band.
  u128 m = static_cast<u128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix(seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t k : keys) h = mix(h ^ (mix(k) + kGamma + (h << 6) + (h >> 2)));
  return h;
}

}  // namespace iqnet
