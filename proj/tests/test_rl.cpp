#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "catsoft/actor_critic.hpp"

using namespace catsoft;
using D = double;

namespace {

Col<D> col(std::initializer_list<D> vals) {
  Col<D> v(Eigen::Index(vals.size()));
  Eigen::Index i = 0;
  for (D x : vals) v[i++] = x;
  return v;
}

GaussianPolicy<D> zero_policy(std::vector<Eigen::Index> dims) {
  return GaussianPolicy<D>{Mlp<D>(dims), Vec<D>::Zero(dims.back())};
}

D rel_err(D a, D b) { return std::abs(a - b) / std::max({D(1), std::abs(a), std::abs(b)}); }

bool snapshots_equal(const std::vector<ParamSubset<D>>& a, const std::vector<ParamSubset<D>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].values.size() != b[i].values.size()) return false;
    if ((a[i].values != b[i].values).any()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("td_target bootstraps from the target value unless terminal") {
  CHECK(td_target<D>(1.0, 2.0, 0.99, false) == doctest::Approx(2.98).epsilon(1e-15));
  CHECK(td_target<D>(1.0, 2.0, 0.0, false) == 1.0);
  CHECK(td_target<D>(1.0, 2.0, 0.99, true) == 1.0);
  CHECK(td_target<D>(-0.5, 100.0, 0.99, true) == -0.5);
  CHECK_THROWS_AS(td_target<D>(std::nan(""), 0.0, 0.99, false), NumericError);
  CHECK_THROWS_AS(td_target<D>(0.0, INFINITY, 0.99, false), NumericError);
}

TEST_CASE("policy log density matches the diagonal Gaussian formula") {
  auto p = zero_policy({2, 4, 1});
  const D half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Col<D> obs = col({0.3, -0.7});

  CHECK(policy_log_density(p, obs, col({0.0})) == doctest::Approx(-half_log_2pi).epsilon(1e-14));
  CHECK(policy_log_density(p, obs, col({2.0})) ==
        doctest::Approx(-2.0 - half_log_2pi).epsilon(1e-14));

  p.logstd[0] = std::log(2.0);
  CHECK(policy_log_density(p, obs, col({2.0})) ==
        doctest::Approx(-0.5 - std::log(2.0) - half_log_2pi).epsilon(1e-13));
}

TEST_CASE("policy_sample is mean plus scaled unit Gaussian noise") {
  auto p = zero_policy({2, 4, 1});
  p.logstd[0] = 0.5;
  Rng draw(4), ref(4);
  const Col<D> obs = col({1.0, 1.0});
  for (int i = 0; i < 20; ++i) {
    const Col<D> a = policy_sample(p, obs, draw);
    const D expect = std::exp(0.5) * ref.gaussian();
    CHECK(a[0] == expect);
  }
}

TEST_CASE("policy snapshot appends the logstd subset") {
  auto p = zero_policy({2, 4, 1});
  const auto snap = p.snapshot();
  REQUIRE(snap.size() == 5);
  CHECK(snap.back().id == "logstd");
  CHECK(snap.back().values.size() == 1);
}

TEST_CASE("critic gradients vanish when the targets equal the values") {
  Mlp<D> net({1, 1});  // zero net: V = 0 everywhere
  CriticBatch<D> batch{{col({1.0}), col({-2.0})}, {0.0, 0.0}};
  const auto out = critic_loss_grad(batch, net);
  CHECK(out.loss == 0.0);
  for (const auto& [id, g] : out.grads) CHECK(g.abs().maxCoeff() == 0.0);
}

TEST_CASE("linear critic has the closed-form gradient") {
  Mlp<D> net({1, 1});  // V(x) = w x + b, both zero
  CriticBatch<D> batch{{col({1.0})}, {1.0}};
  const auto out = critic_loss_grad(batch, net);
  CHECK(out.loss == 0.5);
  CHECK(out.grads.at("W0")[0] == -1.0);  // dL/dw = -(y - V) x
  CHECK(out.grads.at("b0")[0] == -1.0);
  CHECK_THROWS_AS(critic_loss_grad<D>({{col({1.0})}, {1.0, 2.0}}, net), ShapeError);
}

TEST_CASE("critic loss averages over the batch") {
  Mlp<D> net({1, 1});
  CriticBatch<D> batch{{col({1.0}), col({1.0})}, {1.0, 3.0}};
  const auto out = critic_loss_grad(batch, net);
  CHECK(out.loss == doctest::Approx(0.5 * (0.5 * 1.0 + 0.5 * 9.0)).epsilon(1e-15));
  CHECK(out.grads.at("W0")[0] == doctest::Approx(-(1.0 + 3.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("critic gradient matches finite differences") {
  Rng rng(41);
  Mlp<D> net = Mlp<D>::init({2, 8, 1}, rng);
  for (Eigen::Index i = 0; i < net.subset_count(); ++i) {
    auto view = net.subset(i);
    for (Eigen::Index j = 0; j < view.size(); ++j) view[j] += rng.gaussian(0.0, 0.1);
  }
  CriticBatch<D> batch;
  for (int k = 0; k < 5; ++k) {
    batch.obs.push_back(col({rng.gaussian(), rng.gaussian()}));
    batch.targets.push_back(rng.gaussian());
  }
  const auto out = critic_loss_grad(batch, net);
  const D h = 1e-6;
  for (Eigen::Index s = 0; s < net.subset_count(); ++s) {
    auto view = net.subset(s);
    const Vec<D>& g = out.grads.at(net.subset_id(s));
    for (Eigen::Index j = 0; j < view.size(); ++j) {
      const D orig = view[j];
      view[j] = orig + h;
      const D lp = critic_loss_grad(batch, net).loss;
      view[j] = orig - h;
      const D lm = critic_loss_grad(batch, net).loss;
      view[j] = orig;
      CHECK(rel_err((lp - lm) / (2 * h), g[j]) < 1e-4);
    }
  }
}

TEST_CASE("actor gradients vanish for zero advantage") {
  auto p = zero_policy({2, 4, 1});
  ActorBatch<D> batch{{col({0.5, 0.5})}, {col({1.0})}, {0.0},
                      {policy_log_density(p, col({0.5, 0.5}), col({1.0}))}};
  const auto out = actor_loss_grad(batch, p);
  CHECK(out.loss == 0.0);
  CHECK(out.skipped == 0);
  for (const auto& [id, g] : out.grads) CHECK(g.abs().maxCoeff() == 0.0);
}

TEST_CASE("actor loss is -advantage at ratio one") {
  auto p = zero_policy({2, 4, 1});
  const Col<D> obs = col({0.2, -0.4});
  const Col<D> a = col({0.7});
  ActorBatch<D> batch{{obs}, {a}, {1.0}, {policy_log_density(p, obs, a)}};
  const auto out = actor_loss_grad(batch, p);
  CHECK(out.loss == -1.0);  // identical arithmetic: the ratio is exactly one
}

TEST_CASE("actor gradient closed form for a zero net") {
  auto p = zero_policy({1, 1});  // mu = 0 for obs 0, logstd = 0
  const Col<D> obs = col({0.0});
  const Col<D> a = col({2.0});
  ActorBatch<D> batch{{obs}, {a}, {1.0}, {policy_log_density(p, obs, a)}};
  const auto out = actor_loss_grad(batch, p);
  // coef = -1, z = 2: dmu = -2, dlogstd = -(z^2 - 1) = -3
  CHECK(out.grads.at("logstd")[0] == -3.0);
  CHECK(out.grads.at("b0")[0] == -2.0);
  CHECK(out.grads.at("W0")[0] == 0.0);  // input is zero
}

TEST_CASE("actor skips samples whose behavior density underflowed") {
  auto p = zero_policy({2, 4, 1});
  ActorBatch<D> batch{{col({0.0, 0.0})}, {col({0.0})}, {5.0}, {-701.0}};
  const auto out = actor_loss_grad(batch, p);
  CHECK(out.skipped == 1);
  CHECK(out.loss == 0.0);
  for (const auto& [id, g] : out.grads) CHECK(g.abs().maxCoeff() == 0.0);
}

TEST_CASE("actor clamps the likelihood ratio at 1e3") {
  auto p = zero_policy({2, 4, 1});
  const Col<D> obs = col({0.1, 0.1});
  const Col<D> a = col({0.0});
  const D logb = policy_log_density(p, obs, a) - 10.0;  // log ratio +10, clamped
  ActorBatch<D> batch{{obs}, {a}, {1.0}, {logb}};
  const auto out = actor_loss_grad(batch, p);
  CHECK(out.loss == doctest::Approx(-1000.0).epsilon(1e-9));
  CHECK(out.skipped == 0);
}

TEST_CASE("actor gradient matches finite differences") {
  Rng rng(43);
  GaussianPolicy<D> p = GaussianPolicy<D>::init({2, 6, 1}, rng);
  for (Eigen::Index i = 0; i < p.logstd.size(); ++i) p.logstd[i] = rng.gaussian(0.0, 0.2);
  ActorBatch<D> batch;
  for (int k = 0; k < 4; ++k) {
    const Col<D> obs = col({rng.gaussian(), rng.gaussian()});
    const Col<D> a = col({rng.gaussian()});
    batch.obs.push_back(obs);
    batch.actions.push_back(a);
    batch.advantages.push_back(rng.gaussian());
    batch.behavior_logp.push_back(policy_log_density(p, obs, a) + rng.uniform(-0.5, 0.5));
  }
  const auto out = actor_loss_grad(batch, p);
  const D h = 1e-6;

  for (Eigen::Index s = 0; s < p.net.subset_count(); ++s) {
    auto view = p.net.subset(s);
    const Vec<D>& g = out.grads.at(p.net.subset_id(s));
    for (Eigen::Index j = 0; j < view.size(); ++j) {
      const D orig = view[j];
      view[j] = orig + h;
      const D lp = actor_loss_grad(batch, p).loss;
      view[j] = orig - h;
      const D lm = actor_loss_grad(batch, p).loss;
      view[j] = orig;
      CHECK(rel_err((lp - lm) / (2 * h), g[j]) < 1e-4);
    }
  }
  for (Eigen::Index j = 0; j < p.logstd.size(); ++j) {
    const D orig = p.logstd[j];
    p.logstd[j] = orig + h;
    const D lp = actor_loss_grad(batch, p).loss;
    p.logstd[j] = orig - h;
    const D lm = actor_loss_grad(batch, p).loss;
    p.logstd[j] = orig;
    CHECK(rel_err((lp - lm) / (2 * h), out.grads.at("logstd")[j]) < 1e-4);
  }
}

TEST_CASE("clip_grads caps the global norm") {
  GradMap<D> grads;
  grads["a"] = Vec<D>::Constant(1, 3.0);
  grads["b"] = Vec<D>::Constant(1, 4.0);
  detail::clip_grads<D>(grads, 1.0);
  CHECK(grads["a"][0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(grads["b"][0] == doctest::Approx(0.8).epsilon(1e-14));

  GradMap<D> under;
  under["a"] = Vec<D>::Constant(1, 3.0);
  detail::clip_grads<D>(under, 10.0);
  CHECK(under["a"][0] == 3.0);

  GradMap<D> off;
  off["a"] = Vec<D>::Constant(1, 3.0);
  detail::clip_grads<D>(off, 0.0);  // nonpositive cap disables clipping
  CHECK(off["a"][0] == 3.0);
}

TEST_CASE("trainer config validation") {
  TrainerConfig<D> cfg;
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.eval_episodes = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.value_update.tau = 2.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("zero episodes leaves the policy at its initialization") {
  TrainerConfig<D> cfg;
  cfg.episodes = 0;
  cfg.hidden = {8};
  cfg.seed = 2;
  const auto res = train(cfg, make_env<D>("point_mass"));
  CHECK(res.curve.empty());
  CHECK_FALSE(res.diverged);
  CHECK(res.diverged_step == -1);
  CHECK(snapshots_equal(res.policy.snapshot(), res.initial_policy.snapshot()));
  CHECK(res.value_net.snapshot().size() == 4);
}

TEST_CASE("training is reproducible for a fixed seed") {
  TrainerConfig<D> cfg;
  cfg.episodes = 3;
  cfg.hidden = {8, 8};
  cfg.seed = 7;
  cfg.value_update.rule = Rule::catsoft;
  cfg.policy_update.rule = Rule::catsoft;
  const auto a = train(cfg, make_env<D>("point_mass"));
  const auto b = train(cfg, make_env<D>("point_mass"));
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].ret == b.curve[i].ret);
    CHECK(a.curve[i].mean_deviation_v == b.curve[i].mean_deviation_v);
  }
  CHECK(snapshots_equal(a.policy.snapshot(), b.policy.snapshot()));
  CHECK(snapshots_equal(a.value_net.snapshot(), b.value_net.snapshot()));

  cfg.seed = 8;
  const auto c = train(cfg, make_env<D>("point_mass"));
  CHECK_FALSE(snapshots_equal(a.policy.snapshot(), c.policy.snapshot()));
}

TEST_CASE("hard targets with period one never deviate") {
  TrainerConfig<D> cfg;
  cfg.episodes = 2;
  cfg.hidden = {8};
  cfg.seed = 3;
  cfg.value_update.rule = Rule::hard;
  cfg.value_update.hard_period = 1;
  cfg.policy_update.rule = Rule::hard;
  cfg.policy_update.hard_period = 1;
  long reports = 0;
  bool all_zero = true, all_copied = true;
  cfg.report_sink = [&](long, const std::vector<UpdateReport<D>>& rv,
                        const std::vector<UpdateReport<D>>& rp) {
    for (const auto& r : rv) {
      ++reports;
      all_zero = all_zero && r.deviation_mean == 0.0;
      all_copied = all_copied && r.tau1 == 1.0;
    }
    for (const auto& r : rp) {
      ++reports;
      all_zero = all_zero && r.deviation_mean == 0.0;
      all_copied = all_copied && r.tau1 == 1.0;
    }
  };
  const auto res = train(cfg, make_env<D>("point_mass"));
  CHECK(reports == 2 * 50 * (4 + 5));  // 2 episodes x 50 steps x (value + policy subsets)
  CHECK(all_zero);
  CHECK(all_copied);
  for (const auto& row : res.curve) {
    CHECK(row.mean_deviation_v == 0.0);
    CHECK(row.mean_deviation_pi == 0.0);
  }
}

TEST_CASE("episode rows are exactly the means of the streamed reports") {
  TrainerConfig<D> cfg;
  cfg.episodes = 2;
  cfg.hidden = {8, 8};
  cfg.seed = 11;
  cfg.value_update.rule = Rule::catsoft;
  cfg.policy_update.rule = Rule::catsoft;

  // point_mass episodes always run the full 50 steps: |x| stays far below
  // the wall for bounded actions, so episode e covers steps [50e, 50e+49].
  const long steps_per_ep = 50;
  std::vector<double> dev_v(2, 0.0), dev_pi(2, 0.0), rob(2, 0.0);
  long nv_subs = 0, npi_subs = 0;
  cfg.report_sink = [&](long step, const std::vector<UpdateReport<D>>& rv,
                        const std::vector<UpdateReport<D>>& rp) {
    const std::size_t ep = std::size_t(step / steps_per_ep);
    REQUIRE(ep < 2);
    for (const auto& r : rv) { dev_v[ep] += double(r.deviation_mean); rob[ep] += double(r.robustness); }
    for (const auto& r : rp) { dev_pi[ep] += double(r.deviation_mean); rob[ep] += double(r.robustness); }
    nv_subs = long(rv.size());
    npi_subs = long(rp.size());
  };

  const auto res = train(cfg, make_env<D>("point_mass"));
  REQUIRE(res.curve.size() == 2);
  CHECK(nv_subs == 6);   // 3 layers: W0 b0 W1 b1 W2 b2
  CHECK(npi_subs == 7);  // + logstd
  for (std::size_t ep = 0; ep < 2; ++ep) {
    const double nv = double(steps_per_ep) * double(nv_subs);
    const double npi = double(steps_per_ep) * double(npi_subs);
    CHECK(res.curve[ep].mean_deviation_v == dev_v[ep] / nv);
    CHECK(res.curve[ep].mean_deviation_pi == dev_pi[ep] / npi);
    CHECK(res.curve[ep].mean_robustness == rob[ep] / (nv + npi));
  }
}

TEST_CASE("runaway learning rates trip the divergence guard") {
  TrainerConfig<D> cfg;
  cfg.episodes = 5;
  cfg.hidden = {8};
  cfg.seed = 1;
  cfg.learning_rate = 1e10;
  cfg.grad_clip = 10.0;
  const auto res = train(cfg, make_env<D>("point_mass"));
  CHECK(res.diverged);
  CHECK(res.diverged_step >= 1);
  REQUIRE_FALSE(res.curve.empty());
  CHECK(res.curve.back().diverged);
  CHECK(res.curve.size() < 5);  // training stops at the flagged episode
}

TEST_CASE("catsoft training smoke run stays sane") {
  TrainerConfig<D> cfg;
  cfg.episodes = 3;
  cfg.hidden = {8, 8};
  cfg.seed = 19;
  cfg.value_update.rule = Rule::catsoft;
  cfg.policy_update.rule = Rule::catsoft;
  const auto res = train(cfg, make_env<D>("point_mass"));
  REQUIRE(res.curve.size() == 3);
  CHECK_FALSE(res.diverged);
  CHECK(res.skipped_samples == 0);
  for (const auto& row : res.curve) {
    CHECK(std::isfinite(row.ret));
    CHECK(row.ret <= 0.0);  // rewards are negative costs
    CHECK(row.mean_deviation_v >= 0.0);
    CHECK(row.mean_robustness >= 0.0);
    CHECK(row.mean_robustness < 1.0);
  }
}

TEST_CASE("evaluate scores deterministic mean-action rollouts") {
  EnvSpec<D> spec = make_env<D>("point_mass");
  spec.obs_noise_std = 0.0;
  auto p = zero_policy({2, 4, 1});

  // Zero policy from x0: x never moves, every step pays -x0^2.
  const auto one = evaluate(p, spec, 1, 77);
  Rng ref(77);
  const D x0 = ref.uniform(-1.0, 1.0);
  D expect = 0;
  for (int t = 0; t < 50; ++t) expect += -(x0 * x0 + 0.0);
  CHECK(one.mean == expect);
  CHECK(one.stddev == 0.0);
  CHECK(one.episodes == 1);

  const auto three = evaluate(p, spec, 3, 77);
  Rng ref3(77);
  std::vector<D> rets;
  for (int e = 0; e < 3; ++e) {
    const D x = ref3.uniform(-1.0, 1.0);
    D r = 0;
    for (int t = 0; t < 50; ++t) r += -(x * x + 0.0);
    rets.push_back(r);
  }
  D mean = 0;
  for (D r : rets) mean += r;
  mean /= 3.0;
  D acc = 0;
  for (D r : rets) acc += (r - mean) * (r - mean);
  CHECK(three.mean == mean);
  CHECK(three.stddev == std::sqrt(acc / 2.0));

  CHECK_THROWS_AS(evaluate(p, spec, 0, 77), ConfigError);
}

TEST_CASE("evaluate is reproducible and seed-sensitive") {
  EnvSpec<D> spec = make_env<D>("point_mass");
  Rng rng(55);
  auto p = GaussianPolicy<D>::init({2, 8, 1}, rng);
  const auto a = evaluate(p, spec, 5, 123);
  const auto b = evaluate(p, spec, 5, 123);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  const auto c = evaluate(p, spec, 5, 124);
  CHECK(a.mean != c.mean);
}
