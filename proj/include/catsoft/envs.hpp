#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "catsoft/errors.hpp"
#include "catsoft/mlp.hpp"
#include "catsoft/rng.hpp"

namespace catsoft {

// Built-in environments. Observations are the state (point_mass) or a
// trig embedding of it (pendulum) plus Gaussian observation noise.
//
// point_mass: state (x, v), action a in [-2, 2] (1-dim).
//   x' = x + 0.05 v,  v' = v + 0.05 a,  r = -(x^2 + 0.1 a^2)
//   terminal when |x'| > 10 or the step budget runs out.
//   reset: x ~ U(-1, 1), v = 0.
//
// pendulum: state (angle, angular velocity), torque u in [-2, 2] (1-dim).
//   Rigid pendulum, g = 10, m = 1, l = 1, dt = 0.05:
//     w' = w + dt (3g/(2l) sin(angle) + 3/(m l^2) u), clipped to [-8, 8]
//     angle' = angle + dt w'
//   r = -(wrap(angle)^2 + 0.1 w^2 + 0.001 u^2), wrap into [-pi, pi);
//   angle = 0 is upright. No early termination. reset: angle ~ U(-pi, pi),
//   w ~ U(-1, 1).
template <class Scalar>
struct EnvSpec {
  std::string name = "point_mass";
  Eigen::Index obs_dim = 2;
  Eigen::Index act_dim = 1;
  Scalar obs_noise_std = Scalar(1e-3);
  long max_steps = 50;
  Scalar action_limit = Scalar(2);
};

template <class Scalar>
EnvSpec<Scalar> make_env(const std::string& name) {
  if (name == "point_mass") return EnvSpec<Scalar>{};
  if (name == "pendulum") return EnvSpec<Scalar>{"pendulum", 3, 1, Scalar(1e-3), 200, Scalar(2)};
  throw ConfigError("unknown env: " + name);
}

template <class Scalar>
void validate(const EnvSpec<Scalar>& spec) {
  if (spec.obs_dim < 1 || spec.act_dim < 1) throw ConfigError("env dims must be positive");
  if (spec.max_steps < 1) throw ConfigError("max_steps must be positive");
  if (spec.obs_noise_std < 0) throw ConfigError("obs_noise_std must be nonnegative");
}

template <class Scalar>
struct StepResult {
  Col<Scalar> state;
  Col<Scalar> obs;
  Scalar reward = 0;
  bool terminal = false;
};

namespace detail {

template <class Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = Scalar(std::numbers::pi);
  a = std::fmod(a + pi, Scalar(2) * pi);
  if (a < Scalar(0)) a += Scalar(2) * pi;
  return a - pi;
}

template <class Scalar>
Col<Scalar> observe(const EnvSpec<Scalar>& spec, const Col<Scalar>& state, Rng& rng) {
  Col<Scalar> obs(spec.obs_dim);
  if (spec.name == "pendulum")
    obs << std::cos(state[0]), std::sin(state[0]), state[1];
  else
    obs = state;
  if (spec.obs_noise_std > 0)
    for (Eigen::Index i = 0; i < obs.size(); ++i)
      obs[i] += Scalar(rng.gaussian(0.0, double(spec.obs_noise_std)));
  return obs;
}

}  // namespace detail

template <class Scalar>
StepResult<Scalar> env_reset(const EnvSpec<Scalar>& spec, Rng& rng) {
  StepResult<Scalar> res;
  res.state = Col<Scalar>::Zero(2);
  if (spec.name == "pendulum") {
    res.state[0] = Scalar(rng.uniform(-std::numbers::pi, std::numbers::pi));
    res.state[1] = Scalar(rng.uniform(-1.0, 1.0));
  } else {
    res.state[0] = Scalar(rng.uniform(-1.0, 1.0));
  }
  res.obs = detail::observe(spec, res.state, rng);
  return res;
}

// `t` is the zero-based index of the step being taken; the terminal flag
// covers both the dynamics and the step budget (t+1 == max_steps).
template <class Scalar>
StepResult<Scalar> env_step(const EnvSpec<Scalar>& spec, const Col<Scalar>& state,
                            const Col<Scalar>& action, long t, Rng& rng) {
  if (!action.allFinite()) throw NumericError("env_step: non-finite action");
  if (action.size() != spec.act_dim) throw ShapeError("env_step: action size mismatch");
  const Scalar a =
      std::clamp(action[0], -spec.action_limit, spec.action_limit);

  StepResult<Scalar> res;
  res.state = Col<Scalar>::Zero(2);
  if (spec.name == "pendulum") {
    const Scalar g = 10, m = 1, l = 1, dt = Scalar(0.05);
    const Scalar angle = state[0], w = state[1];
    Scalar w2 = w + dt * (Scalar(3) * g / (Scalar(2) * l) * std::sin(angle) +
                          Scalar(3) / (m * l * l) * a);
    w2 = std::clamp(w2, Scalar(-8), Scalar(8));
    res.state[0] = angle + dt * w2;
    res.state[1] = w2;
    const Scalar wrapped = detail::wrap_angle(angle);
    res.reward = -(wrapped * wrapped + Scalar(0.1) * w * w + Scalar(0.001) * a * a);
    res.terminal = t + 1 >= spec.max_steps;
  } else {
    const Scalar x = state[0], v = state[1];
    res.state[0] = x + Scalar(0.05) * v;
    res.state[1] = v + Scalar(0.05) * a;
    res.reward = -(x * x + Scalar(0.1) * a * a);
    res.terminal = std::abs(res.state[0]) > Scalar(10) || t + 1 >= spec.max_steps;
  }
  res.obs = detail::observe(spec, res.state, rng);
  return res;
}

}  // namespace catsoft
