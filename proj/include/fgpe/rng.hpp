#pragma once

#include <cmath>
#include <cstdint>

#include "fgpe/geometry.hpp"

namespace fgpe {

/// What a random draw is for. Part of the stream key, so adding draws of one
/// purpose never perturbs streams of another.
enum class NoisePurpose : std::uint64_t {
  OdometryX = 1,
  OdometryY = 2,
  OdometryTheta = 3,
  MeasureRange = 4,
  MeasureBearing = 5,
  MessageDrop = 6,
  InitPlacement = 7,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based stream: the n-th draw is a pure function of
/// (seed, step, entity, purpose, n). No state is shared between streams.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t step, std::uint64_t entity,
              NoisePurpose purpose)
      : key_(mix4(seed, step, entity, static_cast<std::uint64_t>(purpose))) {}

  /// Uniform in [0, 1).
  double uniform() {
    const std::uint64_t bits = detail::splitmix64(key_ ^ detail::splitmix64(counter_++));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; one fresh pair of uniforms per draw.
  double gaussian() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double gaussian(double sigma) { return sigma * gaussian(); }

 private:
  static std::uint64_t mix4(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                            std::uint64_t d) {
    std::uint64_t h = detail::splitmix64(a);
    h = detail::splitmix64(h ^ detail::splitmix64(b + 0x1000000000000001ull));
    h = detail::splitmix64(h ^ detail::splitmix64(c + 0x2000000000000003ull));
    h = detail::splitmix64(h ^ detail::splitmix64(d + 0x3000000000000005ull));
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fgpe
