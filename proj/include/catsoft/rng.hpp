#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace catsoft {

// splitmix64 (Steele, Lea, Flood 2014). Chosen over std::mt19937 +
// std::normal_distribution because the latter's output is
// implementation-defined; every byte written by this project must be
// reproducible across standard libraries.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// Sequential double-precision generator: uniforms from the top 53 bits,
// gaussians via Box-Muller (the spare value is cached, so draw order
// matters for reproducibility — document any reordering).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : sm_(seed) {}

  // in [0, 1)
  double uniform01() { return double(sm_.next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - u in (0, 1] keeps the log argument nonzero
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // raw 64-bit draw, for deriving sub-seeds
  std::uint64_t bits() { return sm_.next(); }

 private:
  SplitMix64 sm_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace catsoft
