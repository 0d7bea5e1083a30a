#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "catsoft/envs.hpp"
#include "catsoft/mlp.hpp"
#include "catsoft/tracker.hpp"

namespace catsoft {

// ---------------------------------------------------------------------------
// Gaussian policy: MLP mean, state-independent log-std bias parameters.

template <class Scalar>
struct GaussianPolicy {
  Mlp<Scalar> net;
  Vec<Scalar> logstd;

  static GaussianPolicy init(std::vector<Eigen::Index> dims, Rng& rng) {
    GaussianPolicy p{Mlp<Scalar>::init(dims, rng), Vec<Scalar>::Zero(dims.back())};
    return p;
  }

  std::vector<ParamSubset<Scalar>> snapshot() const {
    auto subs = net.snapshot();
    subs.push_back({"logstd", logstd});
    return subs;
  }
};

template <class Scalar>
Col<Scalar> policy_mean(const GaussianPolicy<Scalar>& p, const Col<Scalar>& obs) {
  return p.net.predict(obs);
}

template <class Scalar>
Col<Scalar> policy_sample(const GaussianPolicy<Scalar>& p, const Col<Scalar>& obs, Rng& rng) {
  Col<Scalar> a = p.net.predict(obs);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a[i] += std::exp(p.logstd[i]) * Scalar(rng.gaussian());
  return a;
}

template <class Scalar>
Scalar policy_log_density(const GaussianPolicy<Scalar>& p, const Col<Scalar>& obs,
                          const Col<Scalar>& action) {
  const Col<Scalar> mu = p.net.predict(obs);
  Scalar lp = 0;
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    const Scalar s = std::exp(p.logstd[i]);
    const Scalar z = (action[i] - mu[i]) / s;
    lp += Scalar(-0.5) * z * z - p.logstd[i] - Scalar(0.5) * std::log(Scalar(2) * Scalar(std::numbers::pi));
  }
  return lp;
}

// ---------------------------------------------------------------------------
// losses

// y = r + gamma * V(s'; target), or y = r on terminal transitions.
template <class Scalar>
Scalar td_target(Scalar r, Scalar v_next_target, Scalar gamma, bool terminal) {
  if (!std::isfinite(r) || !std::isfinite(v_next_target)) throw NumericError("td_target: non-finite input");
  return terminal ? r : r + gamma * v_next_target;
}

template <class Scalar>
struct CriticBatch {
  std::vector<Col<Scalar>> obs;
  std::vector<Scalar> targets;  // y, treated as constants
};

template <class Scalar>
struct CriticGrad {
  GradMap<Scalar> grads;
  Scalar loss = 0;  // mean over batch of 0.5 (y - V)^2
};

// Gradient of the mean critic loss w.r.t. the value net parameters.
template <class Scalar>
CriticGrad<Scalar> critic_loss_grad(const CriticBatch<Scalar>& batch, Mlp<Scalar>& value_net) {
  if (batch.obs.size() != batch.targets.size()) throw ShapeError("critic batch size mismatch");
  CriticGrad<Scalar> out;
  const Scalar n = Scalar(batch.obs.size());
  for (std::size_t k = 0; k < batch.obs.size(); ++k) {
    const Scalar v = value_net.forward(batch.obs[k])[0];
    const Scalar err = batch.targets[k] - v;
    out.loss += Scalar(0.5) * err * err / n;
    Col<Scalar> upstream = Col<Scalar>::Constant(1, -err / n);
    for (auto& [id, g] : value_net.backward(batch.obs[k], upstream)) {
      auto it = out.grads.find(id);
      if (it == out.grads.end()) out.grads.emplace(id, g);
      else it->second += g;
    }
  }
  return out;
}

template <class Scalar>
struct ActorBatch {
  std::vector<Col<Scalar>> obs;
  std::vector<Col<Scalar>> actions;     // sampled from the target policy b
  std::vector<Scalar> advantages;       // y - V(s), treated as constants
  std::vector<Scalar> behavior_logp;    // log b(a|s), treated as constants
};

template <class Scalar>
struct ActorGrad {
  GradMap<Scalar> grads;
  Scalar loss = 0;      // mean over batch of -(adv) * pi/b
  long skipped = 0;     // samples dropped for behavior-density underflow
};

inline constexpr double kLogRatioClip = 6.907755278982137;  // ln(1e3)
inline constexpr double kLogDensityFloor = -700.0;

// Gradient of the mean actor loss -(y - V(s)) pi(a|s)/b(a|s) w.r.t. the
// policy parameters (mean net and log-std). The likelihood ratio is clamped
// to [1e-3, 1e3] in log space; samples whose behavior density underflows
// are skipped and counted.
template <class Scalar>
ActorGrad<Scalar> actor_loss_grad(const ActorBatch<Scalar>& batch, GaussianPolicy<Scalar>& policy) {
  const std::size_t n = batch.obs.size();
  if (batch.actions.size() != n || batch.advantages.size() != n || batch.behavior_logp.size() != n)
    throw ShapeError("actor batch size mismatch");

  ActorGrad<Scalar> out;
  out.grads["logstd"] = Vec<Scalar>::Zero(policy.logstd.size());
  for (Eigen::Index i = 0; i < policy.net.subset_count(); ++i)
    out.grads[policy.net.subset_id(i)] = Vec<Scalar>::Zero(policy.net.subset(i).size());

  for (std::size_t k = 0; k < n; ++k) {
    if (double(batch.behavior_logp[k]) < kLogDensityFloor) {
      ++out.skipped;
      continue;
    }
    const Col<Scalar> mu = policy.net.forward(batch.obs[k]);
    Scalar logp = 0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const Scalar s = std::exp(policy.logstd[i]);
      const Scalar z = (batch.actions[k][i] - mu[i]) / s;
      logp += Scalar(-0.5) * z * z - policy.logstd[i] -
              Scalar(0.5) * std::log(Scalar(2) * Scalar(std::numbers::pi));
    }
    const Scalar log_ratio = std::clamp(logp - batch.behavior_logp[k], Scalar(-kLogRatioClip),
                                        Scalar(kLogRatioClip));
    const Scalar ratio = std::exp(log_ratio);
    const Scalar coef = -batch.advantages[k] * ratio / Scalar(n);
    out.loss += coef;

    // d loss / d mu = coef * (a - mu)/s^2 ; d loss / d logstd = coef * (z^2 - 1)
    Col<Scalar> dmu(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const Scalar s = std::exp(policy.logstd[i]);
      const Scalar z = (batch.actions[k][i] - mu[i]) / s;
      dmu[i] = coef * z / s;
      out.grads["logstd"][i] += coef * (z * z - Scalar(1));
    }
    for (auto& [id, g] : policy.net.backward(batch.obs[k], dmu)) out.grads[id] += g;
  }
  return out;
}

// ---------------------------------------------------------------------------
// trainer

template <class Scalar>
struct TrainerConfig {
  Scalar gamma = Scalar(0.99);
  Scalar learning_rate = Scalar(1e-3);
  long episodes = 300;
  UpdateConfig<Scalar> value_update;   // applied to the value target
  UpdateConfig<Scalar> policy_update;  // applied to the policy target
  long eval_episodes = 100;
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> hidden = {32, 32};
  // Per-net global gradient-norm cap; <= 0 disables. Plain per-sample SGD
  // needs a tight cap at desk scale: looser settings let critic bootstrap
  // drift compound over a few hundred episodes and sink the policy.
  Scalar grad_clip = Scalar(1);
  Scalar divergence_limit = Scalar(1e6);
  // Optional per-step stream of the raw tracker reports (value, policy),
  // keyed by global step. The episode rows are means of exactly these.
  std::function<void(long, const std::vector<UpdateReport<Scalar>>&,
                     const std::vector<UpdateReport<Scalar>>&)>
      report_sink;
};

template <class Scalar>
void validate(const TrainerConfig<Scalar>& cfg) {
  if (!(cfg.gamma >= Scalar(0) && cfg.gamma < Scalar(1))) throw ConfigError("gamma must be in [0,1)");
  if (!(cfg.learning_rate > Scalar(0))) throw ConfigError("learning_rate must be positive");
  if (cfg.episodes < 0) throw ConfigError("episodes must be nonnegative");
  if (cfg.eval_episodes < 1) throw ConfigError("eval_episodes must be positive");
  validate(cfg.value_update);
  validate(cfg.policy_update);
}

template <class Scalar>
struct EpisodeRow {
  long episode = 0;
  Scalar ret = 0;
  Scalar mean_deviation_v = 0;
  Scalar mean_deviation_pi = 0;
  Scalar mean_robustness = 0;
  bool diverged = false;
};

template <class Scalar>
struct TrainResult {
  std::vector<EpisodeRow<Scalar>> curve;
  Mlp<Scalar> value_net;
  GaussianPolicy<Scalar> policy;
  GaussianPolicy<Scalar> initial_policy;  // frozen copy, the random baseline
  bool diverged = false;
  long diverged_step = -1;
  long skipped_samples = 0;
};

template <class Scalar>
struct EvalStats {
  Scalar mean = 0;
  Scalar stddev = 0;
  long episodes = 0;
};

// Deterministic-mean-action rollouts of the policy.
template <class Scalar>
EvalStats<Scalar> evaluate(const GaussianPolicy<Scalar>& policy, const EnvSpec<Scalar>& spec,
                           long episodes, std::uint64_t seed) {
  validate(spec);
  if (episodes < 1) throw ConfigError("evaluate: episodes must be positive");
  Rng rng(seed);
  std::vector<Scalar> returns;
  returns.reserve(std::size_t(episodes));
  for (long e = 0; e < episodes; ++e) {
    auto cur = env_reset(spec, rng);
    Scalar ret = 0;
    for (long t = 0; t < spec.max_steps; ++t) {
      cur = env_step(spec, cur.state, policy_mean(policy, cur.obs), t, rng);
      ret += cur.reward;
      if (cur.terminal) break;
    }
    returns.push_back(ret);
  }
  EvalStats<Scalar> stats;
  stats.episodes = episodes;
  for (Scalar r : returns) stats.mean += r;
  stats.mean /= Scalar(episodes);
  if (episodes > 1) {
    Scalar acc = 0;
    for (Scalar r : returns) acc += (r - stats.mean) * (r - stats.mean);
    stats.stddev = std::sqrt(acc / Scalar(episodes - 1));
  }
  return stats;
}

namespace detail {

template <class Scalar>
void clip_grads(GradMap<Scalar>& grads, Scalar cap) {
  if (!(cap > Scalar(0))) return;
  Scalar sq = 0;
  for (const auto& [id, g] : grads) sq += g.square().sum();
  const Scalar norm = std::sqrt(sq);
  if (norm > cap)
    for (auto& [id, g] : grads) g *= cap / norm;
}

template <class Scalar>
std::vector<VecRef<Scalar>> net_views(Mlp<Scalar>& net) {
  std::vector<VecRef<Scalar>> views;
  for (Eigen::Index i = 0; i < net.subset_count(); ++i) views.push_back(net.subset(i));
  return views;
}

template <class Scalar>
std::vector<VecRef<Scalar>> policy_views(GaussianPolicy<Scalar>& p) {
  auto views = net_views(p.net);
  views.push_back(VecRef<Scalar>(p.logstd));
  return views;
}

template <class Scalar>
void sync_targets(const SubsetTracker<Scalar>& tracker, std::vector<VecRef<Scalar>> views) {
  for (Eigen::Index i = 0; i < tracker.subset_count(); ++i) views[std::size_t(i)] = tracker.target(i);
}

template <class Scalar>
bool exceeds_limit(const std::vector<VecRef<Scalar>>& views, Scalar limit) {
  for (const auto& v : views)
    if (!v.isFinite().all() || v.abs().maxCoeff() > limit) return true;
  return false;
}

}  // namespace detail

// On-policy single-transition actor-critic with target networks for both the
// value and the policy. Actions are sampled from the target policy; the
// update rule is applied to both targets every step; CAT-soft consolidation
// writes back into the main networks through the tracker views.
template <class Scalar>
TrainResult<Scalar> train(const TrainerConfig<Scalar>& cfg, const EnvSpec<Scalar>& spec) {
  validate(cfg);
  validate(spec);
  Rng rng(cfg.seed);

  std::vector<Eigen::Index> vdims{spec.obs_dim};
  for (auto h : cfg.hidden) vdims.push_back(h);
  vdims.push_back(1);
  std::vector<Eigen::Index> pdims = vdims;
  pdims.back() = spec.act_dim;

  Mlp<Scalar> value_net = Mlp<Scalar>::init(vdims, rng);
  GaussianPolicy<Scalar> policy = GaussianPolicy<Scalar>::init(pdims, rng);

  TrainResult<Scalar> result{{}, value_net, policy, policy};

  Mlp<Scalar> target_value = value_net;
  GaussianPolicy<Scalar> target_policy = policy;

  SubsetTracker<Scalar> tracker_v(cfg.value_update, value_net.snapshot());
  SubsetTracker<Scalar> tracker_pi(cfg.policy_update, policy.snapshot());

  long global_step = 0;
  for (long ep = 0; ep < cfg.episodes; ++ep) {
    auto cur = env_reset(spec, rng);
    EpisodeRow<Scalar> row;
    row.episode = ep;
    long steps = 0;
    double dev_v = 0, dev_pi = 0, rob = 0;

    for (long t = 0; t < spec.max_steps; ++t) {
      const Col<Scalar> obs = cur.obs;
      const Col<Scalar> action = policy_sample(target_policy, obs, rng);
      cur = env_step(spec, cur.state, action, t, rng);
      row.ret += cur.reward;

      const Scalar y = td_target(cur.reward, target_value.predict(cur.obs)[0], cfg.gamma,
                                 cur.terminal);
      const Scalar adv = y - value_net.predict(obs)[0];

      auto cg = critic_loss_grad<Scalar>({{obs}, {y}}, value_net);
      auto ag = actor_loss_grad<Scalar>(
          {{obs}, {action}, {adv}, {policy_log_density(target_policy, obs, action)}}, policy);
      result.skipped_samples += ag.skipped;

      detail::clip_grads(cg.grads, cfg.grad_clip);
      detail::clip_grads(ag.grads, cfg.grad_clip);
      sgd_step(value_net, cg.grads, cfg.learning_rate);
      sgd_step(policy.net, ag.grads, cfg.learning_rate);
      policy.logstd -= cfg.learning_rate * ag.grads.at("logstd");

      auto reps_v = tracker_v.feed(detail::net_views(value_net));
      auto reps_pi = tracker_pi.feed(detail::policy_views(policy));
      detail::sync_targets(tracker_v, detail::net_views(target_value));
      detail::sync_targets(tracker_pi, detail::policy_views(target_policy));
      if (cfg.report_sink) cfg.report_sink(global_step, reps_v, reps_pi);

      for (const auto& r : reps_v) { dev_v += double(r.deviation_mean); rob += double(r.robustness); }
      for (const auto& r : reps_pi) { dev_pi += double(r.deviation_mean); rob += double(r.robustness); }
      ++steps;
      ++global_step;

      if (detail::exceeds_limit(detail::net_views(value_net), cfg.divergence_limit) ||
          detail::exceeds_limit(detail::policy_views(policy), cfg.divergence_limit)) {
        result.diverged = true;
        result.diverged_step = global_step;
      }
      if (result.diverged || cur.terminal) break;
    }

    const double nv = double(steps) * double(tracker_v.subset_count());
    const double npi = double(steps) * double(tracker_pi.subset_count());
    row.mean_deviation_v = steps > 0 ? Scalar(dev_v / nv) : Scalar(0);
    row.mean_deviation_pi = steps > 0 ? Scalar(dev_pi / npi) : Scalar(0);
    row.mean_robustness = steps > 0 ? Scalar(rob / (nv + npi)) : Scalar(0);
    row.diverged = result.diverged;
    result.curve.push_back(row);
    if (result.diverged) break;
  }

  result.value_net = std::move(value_net);
  result.policy = std::move(policy);
  return result;
}

}  // namespace catsoft
