#pragma once

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "catsoft/errors.hpp"
#include "catsoft/rng.hpp"
#include "catsoft/update_rules.hpp"

namespace catsoft {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Col = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using GradMap = std::map<std::string, Vec<Scalar>>;

// Fully connected tanh network, linear output layer. Every weight matrix and
// every bias vector is registered as one parameter subset ("W0", "b0", ...);
// matrices are flattened column-major in subset views and snapshots.
template <class Scalar>
class Mlp {
 public:
  explicit Mlp(std::vector<Eigen::Index> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ConfigError("Mlp needs at least input and output dims");
    for (auto d : dims_)
      if (d < 1) throw ConfigError("Mlp layer dims must be positive");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      weights_.push_back(Mat<Scalar>::Zero(dims_[l + 1], dims_[l]));
      biases_.push_back(Col<Scalar>::Zero(dims_[l + 1]));
    }
  }

  // Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
  static Mlp init(std::vector<Eigen::Index> dims, Rng& rng) {
    Mlp net(std::move(dims));
    for (auto& W : net.weights_) {
      const Scalar lim = std::sqrt(Scalar(6) / Scalar(W.rows() + W.cols()));
      for (Eigen::Index c = 0; c < W.cols(); ++c)
        for (Eigen::Index r = 0; r < W.rows(); ++r)
          W(r, c) = Scalar(rng.uniform(-double(lim), double(lim)));
    }
    return net;
  }

  const std::vector<Eigen::Index>& dims() const { return dims_; }
  Eigen::Index input_dim() const { return dims_.front(); }
  Eigen::Index output_dim() const { return dims_.back(); }
  std::size_t layer_count() const { return weights_.size(); }

  Eigen::Index subset_count() const { return Eigen::Index(2 * weights_.size()); }

  std::string subset_id(Eigen::Index i) const {
    return (i % 2 == 0 ? "W" : "b") + std::to_string(i / 2);
  }

  VecRef<Scalar> subset(Eigen::Index i) {
    auto& W = weights_[std::size_t(i / 2)];
    auto& b = biases_[std::size_t(i / 2)];
    if (i % 2 == 0) return VecRef<Scalar>(Eigen::Map<Vec<Scalar>>(W.data(), W.size()));
    return VecRef<Scalar>(Eigen::Map<Vec<Scalar>>(b.data(), b.size()));
  }

  VecCRef<Scalar> subset(Eigen::Index i) const {
    const auto& W = weights_[std::size_t(i / 2)];
    const auto& b = biases_[std::size_t(i / 2)];
    if (i % 2 == 0) return VecCRef<Scalar>(Eigen::Map<const Vec<Scalar>>(W.data(), W.size()));
    return VecCRef<Scalar>(Eigen::Map<const Vec<Scalar>>(b.data(), b.size()));
  }

  Eigen::Index param_count() const {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < subset_count(); ++i) n += subset(i).size();
    return n;
  }

  std::vector<ParamSubset<Scalar>> snapshot() const {
    std::vector<ParamSubset<Scalar>> out;
    for (Eigen::Index i = 0; i < subset_count(); ++i)
      out.push_back({subset_id(i), Vec<Scalar>(subset(i))});
    return out;
  }

  // Pure evaluation; does not touch the backward cache.
  Col<Scalar> predict(const Col<Scalar>& x) const {
    if (x.size() != input_dim()) throw ShapeError("Mlp: input size mismatch");
    Col<Scalar> h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      h = weights_[l] * h + biases_[l];
      if (l + 1 < weights_.size()) h = h.array().tanh().matrix();
    }
    return h;
  }

  // Evaluation that records the activations needed by backward().
  Col<Scalar> forward(const Col<Scalar>& x) {
    if (x.size() != input_dim()) throw ShapeError("Mlp: input size mismatch");
    acts_.assign(1, x);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Col<Scalar> h = weights_[l] * acts_.back() + biases_[l];
      if (l + 1 < weights_.size()) h = h.array().tanh().matrix();
      acts_.push_back(std::move(h));
    }
    return acts_.back();
  }

  // Exact reverse-mode gradients of output . upstream w.r.t. every subset.
  // Requires a forward() for the same input to have run immediately before.
  GradMap<Scalar> backward(const Col<Scalar>& x, const Col<Scalar>& upstream) const {
    if (acts_.empty() || acts_.front().size() != x.size() ||
        (acts_.front().array() != x.array()).any())
      throw ContractError("Mlp::backward: no cached forward pass for this input");
    if (upstream.size() != output_dim()) throw ShapeError("Mlp: upstream size mismatch");

    GradMap<Scalar> grads;
    Col<Scalar> g = upstream;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      if (l + 1 < weights_.size())  // through tanh
        g = g.cwiseProduct((Scalar(1) - acts_[l + 1].array().square()).matrix());
      Mat<Scalar> gW = g * acts_[l].transpose();
      grads["W" + std::to_string(l)] = Eigen::Map<Vec<Scalar>>(gW.data(), gW.size());
      grads["b" + std::to_string(l)] = Vec<Scalar>(g.array());
      g = weights_[l].transpose() * g;
    }
    return grads;
  }

 private:
  std::vector<Eigen::Index> dims_;
  std::vector<Mat<Scalar>> weights_;
  std::vector<Col<Scalar>> biases_;
  mutable std::vector<Col<Scalar>> acts_;
};

// theta <- theta - lr * grad, per subset. Every net subset must have a
// matching gradient entry.
template <class Scalar>
void sgd_step(Mlp<Scalar>& net, const GradMap<Scalar>& grads, Scalar lr) {
  for (Eigen::Index i = 0; i < net.subset_count(); ++i) {
    const auto it = grads.find(net.subset_id(i));
    if (it == grads.end()) throw ContractError("sgd_step: missing gradient for " + net.subset_id(i));
    if (it->second.size() != net.subset(i).size())
      throw ShapeError("sgd_step: gradient size mismatch for " + net.subset_id(i));
    net.subset(i) -= lr * it->second;
  }
}

}  // namespace catsoft
