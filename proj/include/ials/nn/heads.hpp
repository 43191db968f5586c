#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ials/core/types.hpp"
#include "ials/nn/dense.hpp"

namespace ials::nn {

inline constexpr double kProbabilityFloor = 1e-12;

/// M independent linear projections, each followed by a softmax.
class MultiHeadSoftmax {
 public:
  MultiHeadSoftmax() = default;
  MultiHeadSoftmax(const std::string& name, int in, const std::vector<int>& classes) {
    for (std::size_t m = 0; m < classes.size(); ++m) {
      heads_.emplace_back(name + ".h" + std::to_string(m), in, classes[m], Activation::identity);
    }
  }

  void init(Rng& rng) {
    for (auto& h : heads_) h.init(rng);
  }

  std::size_t num_heads() const { return heads_.size(); }
  std::vector<int> classes() const {
    std::vector<int> c;
    for (const auto& h : heads_) c.push_back(h.out());
    return c;
  }

  std::vector<Matrix> forward(const Matrix& features) const {
    std::vector<Matrix> probs;
    probs.reserve(heads_.size());
    for (const auto& h : heads_) probs.push_back(softmax_columns(h.forward(features)));
    return probs;
  }

  std::vector<Matrix> forward(const Matrix& features, std::vector<DenseCache>& caches) const {
    caches.resize(heads_.size());
    std::vector<Matrix> probs;
    probs.reserve(heads_.size());
    for (std::size_t m = 0; m < heads_.size(); ++m) {
      probs.push_back(softmax_columns(heads_[m].forward(features, caches[m])));
    }
    return probs;
  }

  /// Takes dL/dlogits per head; returns dL/dfeatures.
  Matrix backward(const std::vector<Matrix>& dlogits, const std::vector<DenseCache>& caches) {
    Matrix g;
    for (std::size_t m = 0; m < heads_.size(); ++m) {
      Matrix gm = heads_[m].backward(dlogits[m], caches[m]);
      if (m == 0) {
        g = std::move(gm);
      } else {
        g += gm;
      }
    }
    return g;
  }

  const std::vector<Dense>& heads() const { return heads_; }
  std::vector<Dense>& heads() { return heads_; }

  ParameterList parameters() {
    ParameterList ps;
    for (auto& h : heads_) {
      ps.push_back(&h.weight);
      ps.push_back(&h.bias);
    }
    return ps;
  }

 private:
  std::vector<Dense> heads_;
};

/// -sum_m log p_m[target_m] for one sample. Probabilities below 1e-12 are
/// clamped; `clamped` is set when that happens.
inline double cross_entropy(const std::vector<Vector>& pred, const InfluenceValue& target, bool* clamped = nullptr) {
  if (pred.size() != target.size()) throw ShapeError("cross_entropy: head count mismatch");
  double loss = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    const int c = target[m];
    if (c < 0 || c >= pred[m].size()) throw ShapeError("cross_entropy: target class out of range");
    double p = pred[m](c);
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      if (clamped != nullptr) *clamped = true;
    }
    loss -= std::log(p);
  }
  return loss;
}

/// Batched multi-head cross-entropy averaged over the batch. `targets[m][j]` is
/// the class of head m for sample j. Fills dL/dlogits when requested.
inline double batch_cross_entropy(const std::vector<Matrix>& probs, const std::vector<std::vector<int>>& targets,
                                  std::vector<Matrix>* dlogits = nullptr, bool* clamped = nullptr) {
  if (probs.size() != targets.size()) throw ShapeError("batch_cross_entropy: head count mismatch");
  const auto batch = probs.empty() ? 0 : probs.front().cols();
  if (batch == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  if (dlogits != nullptr) dlogits->resize(probs.size());
  for (std::size_t m = 0; m < probs.size(); ++m) {
    if (dlogits != nullptr) (*dlogits)[m] = probs[m] * inv;
    for (Eigen::Index j = 0; j < batch; ++j) {
      const int c = targets[m][static_cast<std::size_t>(j)];
      double p = probs[m](c, j);
      if (p < kProbabilityFloor) {
        p = kProbabilityFloor;
        if (clamped != nullptr) *clamped = true;
      }
      loss -= std::log(p);
      if (dlogits != nullptr) (*dlogits)[m](c, j) -= inv;
    }
  }
  return loss * inv;
}

}  // namespace ials::nn
