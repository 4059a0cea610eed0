// Deterministic random streams: a seeded 64-bit Mersenne Twister with
// SplitMix64-scrambled stream derivation, uniform and Gaussian variates.
//
// Every stochastic routine in the library accepts a 64-bit seed and derives
// its generator through this header, so identical (input, seed) pairs yield
// bit-identical results across platforms and thread schedules.
#pragma once

#include <cstdint>
#include <random>

namespace thorne {

/// SplitMix64 finalizer; used to decorrelate user seeds and stream ids.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent substream seed, e.g. for parallel ensemble members.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

/// Seeded generator producing uniforms in (0,1) and standard normals.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on the open interval (0,1): never exactly 0 or 1.
  double uniform() {
    const std::uint64_t bits = engine_();
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace thorne
