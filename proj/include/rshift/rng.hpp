#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rshift {

/// Deterministic random stream. Monte Carlo workers derive independent
/// streams from (master_seed, index...) so results do not depend on
/// scheduling order.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed) : engine_(mix(seed)) {}

  static SeededStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix(master);
    for (auto k : keys) h = mix(h ^ (k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return SeededStream(h);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rshift
