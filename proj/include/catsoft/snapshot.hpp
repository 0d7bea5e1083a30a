#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "catsoft/actor_critic.hpp"
#include "catsoft/mlp.hpp"
#include "catsoft/tracker.hpp"

namespace catsoft {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Checkpoint format. One shared shape for everything that is "named subsets
// of numbers":
//
//   {"subsets": [{"id": "W0", "values": [..]}, ..]}
//
// Networks add a "dims" array so they can be rebuilt; tracker snapshots add
// "rule"/"steps" and per-rule state fields per subset (see tracker_to_json).

namespace detail {

template <class Scalar>
Json vec_to_json(const Vec<Scalar>& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(double(v[i]));
  return arr;
}

template <class Scalar>
Vec<Scalar> vec_from_json(const Json& arr) {
  if (!arr.is_array()) throw ConfigError("snapshot: expected an array of numbers");
  Vec<Scalar> v(Eigen::Index(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Scalar(arr[std::size_t(i)].get<double>());
  return v;
}

}  // namespace detail

template <class Scalar>
Json subsets_to_json(const std::vector<ParamSubset<Scalar>>& subsets) {
  Json arr = Json::array();
  for (const auto& s : subsets) arr.push_back({{"id", s.id}, {"values", detail::vec_to_json(s.values)}});
  return arr;
}

template <class Scalar>
std::vector<ParamSubset<Scalar>> subsets_from_json(const Json& arr) {
  if (!arr.is_array()) throw ConfigError("snapshot: 'subsets' must be an array");
  std::vector<ParamSubset<Scalar>> out;
  for (const auto& s : arr)
    out.push_back({s.at("id").get<std::string>(), detail::vec_from_json<Scalar>(s.at("values"))});
  return out;
}

template <class Scalar>
Json mlp_to_json(const Mlp<Scalar>& net) {
  Json j;
  j["dims"] = net.dims();
  j["subsets"] = subsets_to_json(net.snapshot());
  return j;
}

template <class Scalar>
Mlp<Scalar> mlp_from_json(const Json& j) {
  Mlp<Scalar> net(j.at("dims").get<std::vector<Eigen::Index>>());
  const auto subs = subsets_from_json<Scalar>(j.at("subsets"));
  if (Eigen::Index(subs.size()) != net.subset_count())
    throw ShapeError("mlp snapshot: subset count mismatch");
  for (Eigen::Index i = 0; i < net.subset_count(); ++i) {
    if (subs[std::size_t(i)].id != net.subset_id(i))
      throw ShapeError("mlp snapshot: unexpected subset id " + subs[std::size_t(i)].id);
    if (subs[std::size_t(i)].values.size() != net.subset(i).size())
      throw ShapeError("mlp snapshot: size mismatch for " + subs[std::size_t(i)].id);
    net.subset(i) = subs[std::size_t(i)].values;
  }
  return net;
}

template <class Scalar>
Json policy_to_json(const GaussianPolicy<Scalar>& p) {
  Json j = mlp_to_json(p.net);
  j["logstd"] = detail::vec_to_json(p.logstd);
  return j;
}

template <class Scalar>
GaussianPolicy<Scalar> policy_from_json(const Json& j) {
  GaussianPolicy<Scalar> p{mlp_from_json<Scalar>(j), detail::vec_from_json<Scalar>(j.at("logstd"))};
  if (p.logstd.size() != p.net.output_dim()) throw ShapeError("policy snapshot: logstd size mismatch");
  return p;
}

// Full tracker state: enough to resume a run exactly. Per-subset fields:
//   hard/soft : target
//   tsoft     : target, sigma_sq (scalar), W
//   atsoft/
//   catsoft   : target, sigma_sq (vector), nu_tilde
template <class Scalar>
Json tracker_to_json(const SubsetTracker<Scalar>& tracker) {
  const auto& cfg = tracker.config();
  Json j;
  j["rule"] = rule_name(cfg.rule);
  j["steps"] = tracker.steps_fed();
  Json subs = Json::array();
  for (Eigen::Index i = 0; i < tracker.subset_count(); ++i) {
    Json s;
    s["id"] = tracker.ids()[std::size_t(i)];
    s["target"] = detail::vec_to_json(tracker.target(i));
    switch (cfg.rule) {
      case Rule::tsoft:
        s["sigma_sq"] = double(tracker.tsoft_state(i).sigma_sq);
        s["W"] = double(tracker.tsoft_state(i).W);
        break;
      case Rule::atsoft:
      case Rule::catsoft:
        s["sigma_sq"] = detail::vec_to_json(tracker.atsoft_state(i).sigma_sq);
        s["nu_tilde"] = double(tracker.atsoft_state(i).nu_tilde);
        break;
      default: break;
    }
    subs.push_back(std::move(s));
  }
  j["subsets"] = std::move(subs);
  return j;
}

template <class Scalar>
SubsetTracker<Scalar> tracker_from_json(const UpdateConfig<Scalar>& cfg, const Json& j) {
  if (j.at("rule").get<std::string>() != rule_name(cfg.rule))
    throw ConfigError("tracker snapshot: rule mismatch");
  std::vector<ParamSubset<Scalar>> init;
  for (const auto& s : j.at("subsets"))
    init.push_back({s.at("id").get<std::string>(), detail::vec_from_json<Scalar>(s.at("target"))});
  SubsetTracker<Scalar> tracker(cfg, init);
  for (Eigen::Index i = 0; i < tracker.subset_count(); ++i) {
    const auto& s = j.at("subsets")[std::size_t(i)];
    switch (cfg.rule) {
      case Rule::tsoft:
        tracker.tsoft_state(i).sigma_sq = Scalar(s.at("sigma_sq").get<double>());
        tracker.tsoft_state(i).W = Scalar(s.at("W").get<double>());
        break;
      case Rule::atsoft:
      case Rule::catsoft: {
        auto sig = detail::vec_from_json<Scalar>(s.at("sigma_sq"));
        if (sig.size() != tracker.target(i).size())
          throw ShapeError("tracker snapshot: sigma_sq size mismatch");
        tracker.atsoft_state(i).sigma_sq = std::move(sig);
        tracker.atsoft_state(i).nu_tilde = Scalar(s.at("nu_tilde").get<double>());
        break;
      }
      default: break;
    }
  }
  tracker.set_steps_fed(j.at("steps").get<long>());
  return tracker;
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  return Json::parse(in);
}

}  // namespace catsoft
