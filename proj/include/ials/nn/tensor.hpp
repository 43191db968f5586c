#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "ials/core/error.hpp"
#include "ials/core/rng.hpp"

namespace ials::nn {

// Column-per-sample layout: a batch of B inputs of width n is an n x B matrix.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, tanh, relu };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "'");
}

inline void require_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values at ") + where);
}

/// A trainable array and its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }

  void init_uniform(Rng& rng, double bound) {
    // column-major fill order is part of the determinism contract
    for (Eigen::Index j = 0; j < value.cols(); ++j)
      for (Eigen::Index i = 0; i < value.rows(); ++i) value(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
  }
};

using ParameterList = std::vector<Parameter*>;

inline void zero_grads(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

inline double grad_norm(const ParameterList& params) {
  double s = 0.0;
  for (auto* p : params) s += p->grad.squaredNorm();
  return std::sqrt(s);
}

/// Scales gradients so their global L2 norm is at most max_norm. Returns the
/// norm before clipping.
inline double clip_grad_norm(const ParameterList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

inline Matrix apply_activation(Activation act, const Matrix& pre) {
  switch (act) {
    case Activation::identity: return pre;
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::relu: return pre.cwiseMax(0.0);
  }
  return pre;
}

/// d(out)/d(pre) applied to grad_out, expressed through the activation output.
inline Matrix activation_backward(Activation act, const Matrix& out, const Matrix& grad_out) {
  switch (act) {
    case Activation::identity: return grad_out;
    case Activation::tanh: return (grad_out.array() * (1.0 - out.array().square())).matrix();
    case Activation::relu: return (grad_out.array() * (out.array() > 0.0).cast<double>()).matrix();
  }
  return grad_out;
}

inline Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

/// Column-wise softmax with max subtraction.
inline Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

}  // namespace ials::nn
