#pragma once

#include <cmath>
#include <vector>

#include "ials/nn/tensor.hpp"

namespace ials::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterList params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }

  /// One update from the accumulated gradients. Throws NumericError (and leaves
  /// parameters untouched) if any gradient is non-finite.
  void step() {
    for (auto* p : params_) require_finite(p->grad, p->name.c_str());
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto* p = params_[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p->grad;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
      const double bc1 = c1 > 0.0 ? c1 : 1.0;
      const double bc2 = c2 > 0.0 ? c2 : 1.0;
      p->value.array() -= cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
    }
  }

  void zero_grad() { zero_grads(params_); }

  long steps() const { return t_; }
  AdamConfig& config() { return cfg_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  ParameterList params_;
  AdamConfig cfg_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace ials::nn
