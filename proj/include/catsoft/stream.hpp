#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "catsoft/errors.hpp"
#include "catsoft/rng.hpp"
#include "catsoft/update_rules.hpp"

namespace catsoft {

// Scalar base trajectory shared by all elements of the stream.
struct BaseTrajectory {
  enum class Kind { constant, step, ramp, sinusoid } kind = Kind::constant;
  double value = 0.0;      // constant: level
  long step_at = 1;        // step: jump time
  double step_to = 1.0;    // step: level from step_at on (0 before)
  double slope = 0.0;      // ramp: value = slope * t
  double amplitude = 1.0;  // sinusoid
  double period = 100.0;   // sinusoid

  double at(long t) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::step: return t >= step_at ? step_to : 0.0;
      case Kind::ramp: return slope * double(t);
      case Kind::sinusoid:
        return amplitude * std::sin(2.0 * std::numbers::pi * double(t) / period);
    }
    return 0.0;
  }
};

struct StreamSpec {
  Eigen::Index dim = 100;
  long horizon = 5000;
  BaseTrajectory base;
  double noise_std = 0.01;
  double outlier_prob = 0.1;
  double outlier_scale = 100.0;
  std::uint64_t seed = 0;
};

inline void validate(const StreamSpec& spec) {
  if (spec.dim < 1) throw ConfigError("dim must be positive");
  if (spec.horizon < 1) throw ConfigError("horizon must be positive");
  if (spec.noise_std < 0) throw ConfigError("noise_std must be nonnegative");
  if (!(spec.outlier_prob >= 0.0 && spec.outlier_prob <= 1.0))
    throw ConfigError("outlier_prob must be in [0,1]");
  if (spec.outlier_scale < 0) throw ConfigError("outlier_scale must be nonnegative");
  if (spec.base.kind == BaseTrajectory::Kind::sinusoid && !(spec.base.period > 0))
    throw ConfigError("sinusoid period must be positive");
}

// value[t][j] = base(t) + N(0, noise_std^2) + outlier, where the outlier is
// +-outlier_scale with probability outlier_prob, independently per element,
// sign uniform. Draw order is fixed (per step, per element: noise, outlier
// uniform, then sign if hit) so streams are reproducible byte for byte.
template <class Scalar = double>
std::vector<Vec<Scalar>> generate_stream(const StreamSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  std::vector<Vec<Scalar>> out;
  out.reserve(std::size_t(spec.horizon));
  for (long t = 0; t < spec.horizon; ++t) {
    Vec<Scalar> v(spec.dim);
    const double base = spec.base.at(t);
    for (Eigen::Index j = 0; j < spec.dim; ++j) {
      double x = base;
      if (spec.noise_std > 0) x += rng.gaussian(0.0, spec.noise_std);
      if (rng.uniform01() < spec.outlier_prob)
        x += (rng.uniform01() < 0.5 ? -1.0 : 1.0) * spec.outlier_scale;
      v[j] = Scalar(x);
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace catsoft
