#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace marvel {

/// Independent random streams derived from one master seed. Each consumer
/// draws from its own stream so that, e.g., changing the noise rate does not
/// perturb the data or initialization draws.
enum class Stream : std::uint64_t {
  data = 1,     // dataset generators, train/test split, fold plans
  noise = 2,    // label corruption
  init = 3,     // parameter initialization
  shuffle = 4,  // per-epoch mini-batch order (substream = epoch)
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw i is mix64(key + i * golden), where the key
/// hashes (seed, stream, substream). Output depends only on those three
/// values and the draw index, so any language can reproduce it with the
/// 64-bit arithmetic above.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) noexcept
      : key_(mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream))) ^
                   (substream * 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

  /// Standard normal via Box-Muller (cosine branch only; two uniforms per draw).
  double normal() noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates from the back using CounterRng::below.
template <typename T>
void shuffle(std::vector<T>& items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace marvel
