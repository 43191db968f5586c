#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ials/nn/tensor.hpp"

namespace ials::nn {

struct GruStepCache {
  Matrix x;
  Matrix h_prev;
  Matrix z;
  Matrix r;
  Matrix n;
  Matrix rh;  // r * h_prev
};

/// Gated recurrent unit:
///   z  = sigmoid(Wz x + Uz h + bz)
///   r  = sigmoid(Wr x + Ur h + br)
///   n  = tanh(Wn x + Un (r * h) + bn)
///   h' = (1 - z) * n + z * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(const std::string& name, int in, int hidden)
      : w_z(name + ".w_z", hidden, in),
        u_z(name + ".u_z", hidden, hidden),
        b_z(name + ".b_z", hidden, 1),
        w_r(name + ".w_r", hidden, in),
        u_r(name + ".u_r", hidden, hidden),
        b_r(name + ".b_r", hidden, 1),
        w_n(name + ".w_n", hidden, in),
        u_n(name + ".u_n", hidden, hidden),
        b_n(name + ".b_n", hidden, 1) {}

  int in() const { return static_cast<int>(w_z.value.cols()); }
  int hidden() const { return static_cast<int>(w_z.value.rows()); }

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, hidden())));
    for (auto* p : parameters()) p->init_uniform(rng, bound);
  }

  Matrix step(const Matrix& x, const Matrix& h) const {
    GruStepCache c;
    return step(x, h, c);
  }

  Matrix step(const Matrix& x, const Matrix& h, GruStepCache& c) const {
    if (x.rows() != in() || h.rows() != hidden() || x.cols() != h.cols()) {
      throw ShapeError("gru step: shape mismatch");
    }
    require_finite(x, "gru input");
    c.x = x;
    c.h_prev = h;
    Matrix az = w_z.value * x + u_z.value * h;
    az.colwise() += b_z.value.col(0);
    c.z = sigmoid(az);
    Matrix ar = w_r.value * x + u_r.value * h;
    ar.colwise() += b_r.value.col(0);
    c.r = sigmoid(ar);
    c.rh = c.r.cwiseProduct(h);
    Matrix an = w_n.value * x + u_n.value * c.rh;
    an.colwise() += b_n.value.col(0);
    c.n = an.array().tanh().matrix();
    return ((1.0 - c.z.array()) * c.n.array() + c.z.array() * h.array()).matrix();
  }

  /// Back-propagates dL/dh' through one step. Accumulates parameter gradients,
  /// writes dL/dh_prev and (optionally) dL/dx.
  void backward(const Matrix& dh_next, const GruStepCache& c, Matrix& dh_prev, Matrix* dx = nullptr) {
    const auto z = c.z.array();
    const auto n = c.n.array();
    const auto r = c.r.array();
    const auto hp = c.h_prev.array();
    const auto dh = dh_next.array();

    const Matrix dan = (dh * (1.0 - z) * (1.0 - n.square())).matrix();
    const Matrix daz = (dh * (hp - n) * z * (1.0 - z)).matrix();
    const Matrix drh = u_n.value.transpose() * dan;
    const Matrix dar = (drh.array() * hp * r * (1.0 - r)).matrix();

    w_n.grad.noalias() += dan * c.x.transpose();
    u_n.grad.noalias() += dan * c.rh.transpose();
    b_n.grad.col(0) += dan.rowwise().sum();
    w_z.grad.noalias() += daz * c.x.transpose();
    u_z.grad.noalias() += daz * c.h_prev.transpose();
    b_z.grad.col(0) += daz.rowwise().sum();
    w_r.grad.noalias() += dar * c.x.transpose();
    u_r.grad.noalias() += dar * c.h_prev.transpose();
    b_r.grad.col(0) += dar.rowwise().sum();

    dh_prev = (dh * z).matrix() + (drh.array() * r).matrix() + u_z.value.transpose() * daz +
              u_r.value.transpose() * dar;
    if (dx != nullptr) {
      *dx = w_z.value.transpose() * daz + w_r.value.transpose() * dar + w_n.value.transpose() * dan;
    }
  }

  ParameterList parameters() { return {&w_z, &u_z, &b_z, &w_r, &u_r, &b_r, &w_n, &u_n, &b_n}; }

  Parameter w_z, u_z, b_z;
  Parameter w_r, u_r, b_r;
  Parameter w_n, u_n, b_n;
};

/// Runs the cell over a sequence from h0 and keeps every step's cache for BPTT.
inline Matrix gru_unroll(const GruCell& cell, const std::vector<Matrix>& xs, const Matrix& h0,
                         std::vector<GruStepCache>& caches) {
  caches.resize(xs.size());
  Matrix h = h0;
  for (std::size_t t = 0; t < xs.size(); ++t) h = cell.step(xs[t], h, caches[t]);
  return h;
}

/// BPTT from a gradient on the final hidden state. Returns dL/dh0.
inline Matrix gru_backward_through_time(GruCell& cell, const Matrix& dh_final,
                                        const std::vector<GruStepCache>& caches,
                                        std::vector<Matrix>* dxs = nullptr) {
  Matrix dh = dh_final;
  if (dxs != nullptr) dxs->resize(caches.size());
  for (std::size_t t = caches.size(); t-- > 0;) {
    Matrix dprev;
    cell.backward(dh, caches[t], dprev, dxs != nullptr ? &(*dxs)[t] : nullptr);
    dh = std::move(dprev);
  }
  return dh;
}

}  // namespace ials::nn
