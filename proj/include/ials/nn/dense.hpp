#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ials/nn/tensor.hpp"

namespace ials::nn {

struct DenseCache {
  Matrix input;
  Matrix output;
};

/// y = act(W x + b)
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, int in, int out, Activation act)
      : weight(name + ".weight", out, in), bias(name + ".bias", out, 1), activation(act) {}

  int in() const { return static_cast<int>(weight.value.cols()); }
  int out() const { return static_cast<int>(weight.value.rows()); }

  /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and bias
  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, in())));
    weight.init_uniform(rng, bound);
    bias.init_uniform(rng, bound);
  }

  Matrix forward(const Matrix& x) const {
    check_input(x);
    Matrix pre = weight.value * x;
    pre.colwise() += bias.value.col(0);
    return apply_activation(activation, pre);
  }

  Matrix forward(const Matrix& x, DenseCache& cache) const {
    cache.input = x;
    cache.output = forward(x);
    return cache.output;
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const Matrix& grad_out, const DenseCache& cache) {
    const Matrix dpre = activation_backward(activation, cache.output, grad_out);
    weight.grad.noalias() += dpre * cache.input.transpose();
    bias.grad.col(0) += dpre.rowwise().sum();
    return weight.value.transpose() * dpre;
  }

  ParameterList parameters() { return {&weight, &bias}; }

  Parameter weight;
  Parameter bias;
  Activation activation = Activation::identity;

 private:
  void check_input(const Matrix& x) const {
    if (x.rows() != weight.value.cols()) {
      throw ShapeError("dense '" + weight.name + "': input width " + std::to_string(x.rows()) + ", expected " +
                       std::to_string(weight.value.cols()));
    }
    require_finite(x, "dense input");
  }
};

/// Stack of dense layers; every layer but the last uses `hidden_act`.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, int in, const std::vector<int>& hidden, int out, Activation hidden_act,
      Activation out_act = Activation::identity) {
    int prev = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      layers_.emplace_back(name + ".l" + std::to_string(i), prev, hidden[i], hidden_act);
      prev = hidden[i];
    }
    layers_.emplace_back(name + ".l" + std::to_string(hidden.size()), prev, out, out_act);
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l.init(rng);
  }

  int in() const { return layers_.front().in(); }
  int out() const { return layers_.back().out(); }

  Matrix forward(const Matrix& x) const {
    Matrix h = x;
    for (const auto& l : layers_) h = l.forward(h);
    return h;
  }

  Matrix forward(const Matrix& x, std::vector<DenseCache>& caches) const {
    caches.resize(layers_.size());
    Matrix h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i].forward(h, caches[i]);
    return h;
  }

  Matrix backward(const Matrix& grad_out, const std::vector<DenseCache>& caches) {
    Matrix g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].backward(g, caches[i]);
    return g;
  }

  ParameterList parameters() {
    ParameterList ps;
    for (auto& l : layers_) {
      ps.push_back(&l.weight);
      ps.push_back(&l.bias);
    }
    return ps;
  }

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

 private:
  std::vector<Dense> layers_;
};

}  // namespace ials::nn
