#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "catsoft/stream.hpp"
#include "catsoft/tracker.hpp"

namespace catsoft {

// Tracking-quality summary for one (stream, rule) run. The burn-in window
// (first 10% of the horizon) is excluded from the RMSE and from the series;
// series entry k corresponds to step burn_in + k.
template <class Scalar>
struct TrackMetrics {
  Scalar tracking_rmse = 0;
  std::vector<Scalar> deviation_mean_series;
  std::vector<Scalar> robustness_series;
  Vec<Scalar> final_sigma_sq;
  Scalar final_nu_tilde = 0;
  long burn_in = 0;
};

// Per-step row for optional full logging (the synth CSV).
template <class Scalar>
struct TrackRow {
  long step = 0;
  Scalar deviation_mean = 0;
  Scalar robustness = 0;
  Scalar tau1 = 0;
  Scalar tau2 = 0;
  Scalar tau_c = 0;
  Scalar nu_tilde = 0;
  Scalar tracking_error = 0;  // rms of (target - base) at this step
};

template <class Scalar>
using TrackRowSink = std::function<void(const TrackRow<Scalar>&)>;

inline long burn_in_steps(long horizon) { return horizon / 10; }

// Feeds a stream through one tracker treating the whole vector as a single
// subset. The state is initialized from stream[0]; steps 1..horizon-1 are
// fed as main values. Consolidation (CAT-soft) mutates the fed value before
// it is recorded, exactly as it would mutate a main network.
template <class Scalar>
TrackMetrics<Scalar> run_tracker(const std::vector<Vec<Scalar>>& stream,
                                 const UpdateConfig<Scalar>& cfg, const BaseTrajectory& base,
                                 const TrackRowSink<Scalar>& sink = {}) {
  if (stream.empty()) throw ShapeError("run_tracker: empty stream");
  const long horizon = long(stream.size());
  const long burn = burn_in_steps(horizon);

  SubsetTracker<Scalar> tracker(cfg, {ParamSubset<Scalar>{"stream", stream[0]}});

  TrackMetrics<Scalar> metrics;
  metrics.burn_in = burn;
  double err_acc = 0.0;
  long err_n = 0;

  auto record = [&](long t, const UpdateReport<Scalar>& rep) {
    const Vec<Scalar>& target = tracker.target(0);
    const Scalar err = std::sqrt((target - Scalar(base.at(t))).square().mean());
    if (t >= burn) {
      metrics.deviation_mean_series.push_back(rep.deviation_mean);
      metrics.robustness_series.push_back(rep.robustness);
      err_acc += double(err) * double(err);
      ++err_n;
    }
    if (sink)
      sink(TrackRow<Scalar>{t, rep.deviation_mean, rep.robustness, rep.tau1, rep.tau2, rep.tau_c,
                            rep.nu_tilde, err});
  };

  // step 0 is the initialization state: target == stream[0], no update yet
  {
    UpdateReport<Scalar> rep;
    if (cfg.rule == Rule::tsoft) rep.nu_tilde = cfg.nu;
    if (cfg.rule == Rule::atsoft || cfg.rule == Rule::catsoft) rep.nu_tilde = cfg.nu_lower;
    record(0, rep);
  }

  Vec<Scalar> theta;
  for (long t = 1; t < horizon; ++t) {
    theta = stream[std::size_t(t)];
    auto reps = tracker.feed({VecRef<Scalar>(theta)});
    record(t, reps[0]);
  }

  metrics.tracking_rmse = err_n > 0 ? Scalar(std::sqrt(err_acc / double(err_n))) : Scalar(0);
  switch (cfg.rule) {
    case Rule::tsoft:
      metrics.final_sigma_sq = Vec<Scalar>::Constant(1, tracker.tsoft_state(0).sigma_sq);
      metrics.final_nu_tilde = cfg.nu;
      break;
    case Rule::atsoft:
    case Rule::catsoft:
      metrics.final_sigma_sq = tracker.atsoft_state(0).sigma_sq;
      metrics.final_nu_tilde = tracker.atsoft_state(0).nu_tilde;
      break;
    default: break;
  }
  return metrics;
}

// Runs each rule on the identical stream realization.
template <class Scalar>
std::vector<TrackMetrics<Scalar>> compare_rules(const StreamSpec& spec,
                                                const std::vector<UpdateConfig<Scalar>>& rules) {
  if (rules.empty()) throw ConfigError("compare_rules: need at least one rule");
  const auto stream = generate_stream<Scalar>(spec);
  std::vector<TrackMetrics<Scalar>> out;
  out.reserve(rules.size());
  for (const auto& cfg : rules) out.push_back(run_tracker<Scalar>(stream, cfg, spec.base));
  return out;
}

}  // namespace catsoft
