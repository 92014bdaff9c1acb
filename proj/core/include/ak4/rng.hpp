#pragma once

#include <cstdint>
#include <random>

namespace ak4 {

// Reproducible uniform doubles. std::mt19937_64 is bit-exact across
// platforms; the [0,1) conversion below avoids the implementation-defined
// std::uniform_real_distribution so streams are portable too.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1), 53 random bits
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // symmetric around zero, in (-a, a)
  double symmetric(double a) { return uniform(-a, a); }

  // standard normal via Box-Muller (deterministic, no cached state)
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % range);
  }

 private:
  std::mt19937_64 engine_;
};

// Stable per-trial seed derivation (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ak4
