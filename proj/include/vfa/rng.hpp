#pragma once

// Seeded random streams. All draws go through explicit kernels (Box-Muller,
// inverse-CDF Laplace) rather than std distributions, so a seed pins the
// exact sample sequence independent of the standard library build.

#include <cstdint>
#include <random>

#include "vfa/geometry.hpp"

namespace vfa {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent per-stream seeds derived from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x517cc1b727220a95ull * (stream + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Strictly inside (0, 1).
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller pair; suits the 2-D keypoint draws directly.
  Point normal2() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const Point p = normal2();
    spare_ = p.y;
    have_spare_ = true;
    return p.x;
  }

  // Standard Laplace (location 0, scale 1) by inverse CDF.
  double laplace() {
    const double v = uniform_open() - 0.5;
    const double x = -std::log(1.0 - 2.0 * (v >= 0.0 ? v : -v));
    return v >= 0.0 ? x : -x;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vfa
