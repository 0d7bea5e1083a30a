#pragma once

#include <string>
#include <vector>

#include "catsoft/errors.hpp"
#include "catsoft/update_rules.hpp"

namespace catsoft {

enum class Rule { hard, soft, tsoft, atsoft, catsoft };

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::hard: return "hard";
    case Rule::soft: return "soft";
    case Rule::tsoft: return "tsoft";
    case Rule::atsoft: return "atsoft";
    case Rule::catsoft: return "catsoft";
  }
  return "?";
}

inline Rule rule_from_name(const std::string& s) {
  if (s == "hard") return Rule::hard;
  if (s == "soft") return Rule::soft;
  if (s == "tsoft") return Rule::tsoft;
  if (s == "atsoft") return Rule::atsoft;
  if (s == "catsoft") return Rule::catsoft;
  throw ConfigError("unknown rule: " + s);
}

// Parameters for any of the five rules; each rule reads the fields it uses.
template <class Scalar>
struct UpdateConfig {
  Rule rule = Rule::soft;
  Scalar tau = Scalar(0.1);
  Scalar nu = Scalar(1);        // T-soft degrees of freedom
  Scalar nu_lower = Scalar(1);  // AT-soft df floor
  Scalar epsilon = Scalar(1e-5);
  Scalar lambda_c = Scalar(1);
  Scalar q = Scalar(1);
  long hard_period = 100;

  ATSoftConfig<Scalar> atsoft() const {
    return ATSoftConfig<Scalar>{tau,      nu_lower, epsilon,
                                lambda_c, q,        rule == Rule::catsoft};
  }
};

template <class Scalar>
void validate(const UpdateConfig<Scalar>& cfg) {
  if (!(cfg.tau > Scalar(0) && cfg.tau <= Scalar(1))) throw ConfigError("tau must be in (0,1]");
  if (!(cfg.nu > Scalar(0))) throw ConfigError("nu must be positive");
  if (cfg.hard_period <= 0) throw ConfigError("hard_period must be positive");
  validate(cfg.atsoft());
}

// Tracks one target state per registered subset, dispatching on the rule.
// feed() consumes the current main values and returns one report per subset.
// For CAT-soft the fed main values are mutated in place (consolidation).
template <class Scalar>
class SubsetTracker {
 public:
  SubsetTracker(const UpdateConfig<Scalar>& cfg, const std::vector<ParamSubset<Scalar>>& init)
      : cfg_(cfg) {
    validate(cfg_);
    for (const auto& s : init) {
      if (s.values.size() == 0) throw ShapeError("subset '" + s.id + "' is empty");
      ids_.push_back(s.id);
      switch (cfg_.rule) {
        case Rule::hard:
        case Rule::soft:
          targets_.push_back(s.values);
          break;
        case Rule::tsoft:
          tsoft_.push_back(tsoft_init<Scalar>(s.values, cfg_.tau, cfg_.epsilon));
          break;
        case Rule::atsoft:
        case Rule::catsoft:
          atsoft_.push_back(atsoft_init<Scalar>(s.values, cfg_.atsoft()));
          break;
      }
    }
  }

  Eigen::Index subset_count() const { return Eigen::Index(ids_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }

  const Vec<Scalar>& target(Eigen::Index i) const {
    switch (cfg_.rule) {
      case Rule::hard:
      case Rule::soft: return targets_[std::size_t(i)];
      case Rule::tsoft: return tsoft_[std::size_t(i)].target;
      default: return atsoft_[std::size_t(i)].target;
    }
  }

  // Internals exposed mutably for snapshot restore.
  Vec<Scalar>& target_mut(Eigen::Index i) {
    switch (cfg_.rule) {
      case Rule::hard:
      case Rule::soft: return targets_[std::size_t(i)];
      case Rule::tsoft: return tsoft_[std::size_t(i)].target;
      default: return atsoft_[std::size_t(i)].target;
    }
  }
  const TSoftState<Scalar>& tsoft_state(Eigen::Index i) const { return tsoft_[std::size_t(i)]; }
  const ATSoftState<Scalar>& atsoft_state(Eigen::Index i) const { return atsoft_[std::size_t(i)]; }
  TSoftState<Scalar>& tsoft_state(Eigen::Index i) { return tsoft_[std::size_t(i)]; }
  ATSoftState<Scalar>& atsoft_state(Eigen::Index i) { return atsoft_[std::size_t(i)]; }

  long steps_fed() const { return step_; }
  void set_steps_fed(long s) {
    if (s < 0) throw ConfigError("steps_fed must be nonnegative");
    step_ = s;
  }
  const UpdateConfig<Scalar>& config() const { return cfg_; }

  // One rule step over all subsets. `mains` must be ordered like the
  // registration list.
  std::vector<UpdateReport<Scalar>> feed(std::vector<VecRef<Scalar>> mains) {
    if (Eigen::Index(mains.size()) != subset_count())
      throw ShapeError("feed: subset count mismatch");
    std::vector<UpdateReport<Scalar>> reps;
    reps.reserve(mains.size());
    for (std::size_t i = 0; i < mains.size(); ++i) reps.push_back(feed_one(i, mains[i]));
    ++step_;
    return reps;
  }

 private:
  UpdateReport<Scalar> feed_one(std::size_t i, VecRef<Scalar> main) {
    UpdateReport<Scalar> rep;
    switch (cfg_.rule) {
      case Rule::hard: {
        const bool copied = hard_update<Scalar>(main, cfg_.hard_period, step_, targets_[i]);
        rep.tau1 = copied ? Scalar(1) : Scalar(0);
        rep.deviation_mean = (main - targets_[i]).abs().mean();
        break;
      }
      case Rule::soft: {
        soft_update<Scalar>(main, targets_[i], cfg_.tau);
        rep.tau1 = cfg_.tau;
        rep.deviation_mean = (main - targets_[i]).abs().mean();
        break;
      }
      case Rule::tsoft:
        rep = tsoft_update<Scalar>(main, tsoft_[i], cfg_.tau, cfg_.nu);
        break;
      case Rule::atsoft:
      case Rule::catsoft:
        rep = catsoft_step<Scalar>(main, atsoft_[i], cfg_.atsoft());
        break;
    }
    return rep;
  }

  UpdateConfig<Scalar> cfg_;
  std::vector<std::string> ids_;
  std::vector<Vec<Scalar>> targets_;        // hard, soft
  std::vector<TSoftState<Scalar>> tsoft_;   // tsoft
  std::vector<ATSoftState<Scalar>> atsoft_; // atsoft, catsoft
  long step_ = 0;
};

}  // namespace catsoft
