#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "catsoft/errors.hpp"

namespace catsoft {

template <class Scalar>
using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using VecRef = Eigen::Ref<Vec<Scalar>>;

template <class Scalar>
using VecCRef = Eigen::Ref<const Vec<Scalar>>;

// One named parameter group (a weight matrix or bias vector, flattened).
// Groups are the unit of tracking: each gets its own rule state.
template <class Scalar>
struct ParamSubset {
  std::string id;
  Vec<Scalar> values;
};

// ---------------------------------------------------------------------------
// rule configuration and state

template <class Scalar>
struct SoftConfig {
  Scalar tau = Scalar(0.1);  // in (0, 1]
};

// State of the T-soft rule for one subset. sigma_sq is a single scalar:
// the rule models the whole subset's deviation as one-dimensional.
template <class Scalar>
struct TSoftState {
  Vec<Scalar> target;
  Scalar sigma_sq;
  Scalar W;
};

template <class Scalar>
TSoftState<Scalar> tsoft_init(const VecCRef<Scalar>& main, Scalar tau, Scalar eps) {
  if (!(tau > Scalar(0) && tau <= Scalar(1))) throw ConfigError("tau must be in (0,1]");
  if (!(eps > Scalar(0))) throw ConfigError("epsilon must be positive");
  return TSoftState<Scalar>{main, eps * eps, (Scalar(1) - tau) / tau};
}

// State of the AT-soft / CAT-soft rule for one subset: per-dimension scale
// estimate plus a shared degrees-of-freedom estimate.
template <class Scalar>
struct ATSoftState {
  Vec<Scalar> target;
  Vec<Scalar> sigma_sq;  // elementwise, >= eps^2
  Scalar nu_tilde;       // >= nu_lower
};

template <class Scalar>
struct ATSoftConfig {
  Scalar tau = Scalar(0.1);       // in (0, 1]
  Scalar nu_lower = Scalar(1);    // > 0, floor of nu_tilde
  Scalar epsilon = Scalar(1e-5);  // scale floor, sigma >= epsilon
  Scalar lambda_c = Scalar(1);    // in [0, 1], consolidation strength
  Scalar q = Scalar(1);           // in [0, 1], consolidation quantile level
  bool consolidation_enabled = false;
};

template <class Scalar>
void validate(const ATSoftConfig<Scalar>& cfg) {
  if (!(cfg.tau > Scalar(0) && cfg.tau <= Scalar(1))) throw ConfigError("tau must be in (0,1]");
  if (!(cfg.nu_lower > Scalar(0))) throw ConfigError("nu_lower must be positive");
  if (!(cfg.epsilon > Scalar(0))) throw ConfigError("epsilon must be positive");
  if (!(cfg.lambda_c >= Scalar(0) && cfg.lambda_c <= Scalar(1)))
    throw ConfigError("lambda must be in [0,1]");
  if (!(cfg.q >= Scalar(0) && cfg.q <= Scalar(1))) throw ConfigError("q must be in [0,1]");
}

template <class Scalar>
ATSoftState<Scalar> atsoft_init(const VecCRef<Scalar>& main, const ATSoftConfig<Scalar>& cfg) {
  validate(cfg);
  ATSoftState<Scalar> st;
  st.target = main;
  st.sigma_sq = Vec<Scalar>::Constant(main.size(), cfg.epsilon * cfg.epsilon);
  st.nu_tilde = cfg.nu_lower;
  return st;
}

// Everything one step of a rule produces besides the state mutation.
// Fields not meaningful for a rule are set to their neutral values
// (see the CSV conventions in the README).
template <class Scalar>
struct UpdateReport {
  Scalar D = 0;       // mean scale-normalized squared deviation
  Scalar w1 = 1;      // deviation weight
  Scalar w2 = 1;      // df-update weight
  Scalar w1_bar = 1;  // upper bound of w1 (value at zero deviation)
  Scalar w2_bar = 1;  // normalizer of w2
  Scalar tau1 = 0;    // effective target update ratio
  Scalar tau2 = 0;    // effective df update ratio
  Scalar tau_c = 0;   // consolidation ratio
  Scalar nu_tilde = 0;
  Scalar deviation_mean = 0;        // mean |theta - target|, post update
  Scalar robustness = 0;            // 1 - w1/w1_bar
  Vec<Scalar> delta;                // per-element (theta-target)^2 / sigma_sq (AT family)
  std::vector<Eigen::Index> consolidated;
};

// ---------------------------------------------------------------------------
// hard update

// Copies main into target whenever step is a multiple of period. The step
// counter starts at 0, so the first call always refreshes.
template <class Scalar>
bool hard_update(const VecCRef<Scalar>& main, long period, long step, VecRef<Scalar> target) {
  if (period <= 0) throw ConfigError("hard update period must be positive");
  if (step < 0) throw ConfigError("hard update step must be nonnegative");
  if (main.size() != target.size()) throw ShapeError("hard_update: size mismatch");
  if (step % period != 0) return false;
  target = main;
  return true;
}

template <class Scalar>
void hard_update(const std::vector<ParamSubset<Scalar>>& main, long period, long step,
                 std::vector<Vec<Scalar>>& targets) {
  if (main.size() != targets.size()) throw ShapeError("hard_update: subset count mismatch");
  for (std::size_t i = 0; i < main.size(); ++i)
    hard_update<Scalar>(main[i].values, period, step, targets[i]);
}

// ---------------------------------------------------------------------------
// soft update

template <class Scalar>
void soft_update(const VecCRef<Scalar>& main, VecRef<Scalar> target, Scalar tau) {
  if (!(tau > Scalar(0) && tau <= Scalar(1))) throw ConfigError("tau must be in (0,1]");
  if (main.size() != target.size()) throw ShapeError("soft_update: size mismatch");
  target = (Scalar(1) - tau) * target + tau * main;
}

// ---------------------------------------------------------------------------
// T-soft update

template <class Scalar>
UpdateReport<Scalar> tsoft_update(const VecCRef<Scalar>& main, TSoftState<Scalar>& st, Scalar tau,
                                  Scalar nu) {
  if (!(nu > Scalar(0))) throw ConfigError("nu must be positive");
  if (!(tau > Scalar(0) && tau <= Scalar(1))) throw ConfigError("tau must be in (0,1]");
  if (main.size() != st.target.size()) throw ShapeError("tsoft_update: size mismatch");
  if (!main.allFinite()) throw NumericError("tsoft_update: non-finite main values");

  const Scalar d = Scalar(main.size());
  const Scalar delta_sq = (main - st.target).square().sum() / d;
  // 0/0 guard: a stream that never deviates drives sigma_sq to zero by
  // underflow; the zero-deviation weight is its exact limit there.
  const Scalar ratio = delta_sq == Scalar(0) ? Scalar(0) : delta_sq / st.sigma_sq;
  const Scalar w = (nu + Scalar(1)) / (nu + ratio);
  const Scalar tau_i = w / (st.W + w);
  const Scalar tau_sigma = tau * w * nu / (nu + Scalar(1));

  st.target = (Scalar(1) - tau_i) * st.target + tau_i * main;
  st.sigma_sq = (Scalar(1) - tau_sigma) * st.sigma_sq + tau_sigma * delta_sq;
  st.W = (Scalar(1) - tau) * (st.W + w);

  UpdateReport<Scalar> rep;
  rep.D = ratio;
  rep.w1 = w;
  rep.w1_bar = (nu + Scalar(1)) / nu;  // w at zero deviation
  rep.tau1 = tau_i;
  rep.tau2 = tau_sigma;
  rep.nu_tilde = nu;
  rep.deviation_mean = (main - st.target).abs().mean();
  rep.robustness = Scalar(1) - rep.w1 / rep.w1_bar;
  return rep;
}

// ---------------------------------------------------------------------------
// AT-soft statistics + apply, consolidation, CAT-soft composition

// Negative log of the float32 tiny value; retained verbatim as the w2
// normalizer even though all state here is 64-bit.
template <class Scalar>
inline constexpr Scalar kW2BarFloor = Scalar(87.3365);

// Pure: computes this step's weights and ratios without touching state.
template <class Scalar>
UpdateReport<Scalar> atsoft_statistics(const VecCRef<Scalar>& main, const ATSoftState<Scalar>& st,
                                       const ATSoftConfig<Scalar>& cfg) {
  if (main.size() != st.target.size()) throw ShapeError("atsoft_statistics: size mismatch");
  if (!main.allFinite()) throw NumericError("atsoft_statistics: non-finite main values");
  if ((st.sigma_sq <= Scalar(0)).any()) throw NumericError("atsoft_statistics: sigma_sq not positive");

  UpdateReport<Scalar> rep;
  rep.delta = (main - st.target).square() / st.sigma_sq;
  rep.D = rep.delta.mean();
  rep.w1 = (st.nu_tilde + Scalar(1)) / (st.nu_tilde + rep.D);
  rep.w2 = rep.w1 - std::log(rep.w1);
  rep.w1_bar = (st.nu_tilde + Scalar(1)) / st.nu_tilde;
  rep.w2_bar = std::max(rep.w1_bar - std::log(rep.w1_bar), kW2BarFloor<Scalar>);
  rep.tau1 = cfg.tau * rep.w1 / rep.w1_bar;
  rep.tau2 = cfg.tau * rep.w2 / rep.w2_bar;
  rep.nu_tilde = st.nu_tilde;
  rep.robustness = Scalar(1) - rep.w1 / rep.w1_bar;
  return rep;
}

// Applies the three blended updates. All update amounts are computed from
// the pre-step state carried in `rep`; no within-step feedback.
template <class Scalar>
void atsoft_apply(const VecCRef<Scalar>& main, ATSoftState<Scalar>& st,
                  const ATSoftConfig<Scalar>& cfg, UpdateReport<Scalar>& rep) {
  const Scalar eps_sq = cfg.epsilon * cfg.epsilon;
  const Scalar nu = st.nu_tilde;

  Vec<Scalar> sigma_sq_next =
      rep.delta * st.sigma_sq +
      ((rep.delta - rep.D) * st.sigma_sq / nu).max(eps_sq);
  const Scalar nu_next = ((nu + Scalar(2)) / (nu + Scalar(1)) + nu) * (nu - cfg.nu_lower) /
                             (nu * rep.w2) +
                         cfg.nu_lower + cfg.epsilon;

  st.target = (Scalar(1) - rep.tau1) * st.target + rep.tau1 * main;
  // The blends preserve sigma_sq >= eps^2 and nu_tilde >= nu_lower in exact
  // arithmetic; the clamps only absorb last-ulp rounding at the floors.
  st.sigma_sq = ((Scalar(1) - rep.tau1) * st.sigma_sq + rep.tau1 * sigma_sq_next).max(eps_sq);
  st.nu_tilde = std::max((Scalar(1) - rep.tau2) * nu + rep.tau2 * nu_next, cfg.nu_lower);

  rep.nu_tilde = st.nu_tilde;
  rep.deviation_mean = (main - st.target).abs().mean();
}

// Nearest-rank quantile: sorted ascending, element at index ceil(q*(d-1)).
// No interpolation, so q=1 is exactly the max and q=0 the min.
template <class Scalar>
Scalar quantile_threshold(const Vec<Scalar>& values, Scalar q) {
  if (values.size() == 0) throw ShapeError("quantile_threshold: empty vector");
  if (!(q >= Scalar(0) && q <= Scalar(1))) throw ConfigError("q must be in [0,1]");
  const Eigen::Index d = values.size();
  const auto idx = Eigen::Index(std::ceil(double(q) * double(d - 1)));
  std::vector<Scalar> tmp(values.data(), values.data() + d);
  std::nth_element(tmp.begin(), tmp.begin() + idx, tmp.end());
  return tmp[std::size_t(idx)];
}

// Pulls the highest-deviation main elements back toward the target.
// `rep` must come from this step's atsoft_statistics: the selection uses
// the deviations measured before the target moved. Mutates main only.
template <class Scalar>
void consolidate(VecRef<Scalar> main, const ATSoftState<Scalar>& st,
                 const ATSoftConfig<Scalar>& cfg, UpdateReport<Scalar>& rep) {
  rep.tau_c = cfg.lambda_c * cfg.tau * (Scalar(1) - rep.w1 / rep.w1_bar);
  const Scalar thr = quantile_threshold<Scalar>(rep.delta, cfg.q);
  rep.consolidated.clear();
  for (Eigen::Index j = 0; j < main.size(); ++j) {
    if (rep.delta[j] >= thr) {
      main[j] = (Scalar(1) - rep.tau_c) * main[j] + rep.tau_c * st.target[j];
      rep.consolidated.push_back(j);
    }
  }
}

// One full CAT-soft step: statistics, apply, then (if enabled) consolidation
// of the main values. With consolidation disabled this is exactly AT-soft.
template <class Scalar>
UpdateReport<Scalar> catsoft_step(VecRef<Scalar> main, ATSoftState<Scalar>& st,
                                  const ATSoftConfig<Scalar>& cfg) {
  UpdateReport<Scalar> rep = atsoft_statistics<Scalar>(main, st, cfg);
  atsoft_apply<Scalar>(main, st, cfg, rep);
  if (cfg.consolidation_enabled) {
    consolidate<Scalar>(main, st, cfg, rep);
    rep.deviation_mean = (main - st.target).abs().mean();
  }
  return rep;
}

}  // namespace catsoft
