#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ials/core/error.hpp"
#include "ials/exact/toy_dbn.hpp"

namespace ials::exact {

using Belief = std::vector<double>;

/// Action-local-state history x_0, a_0, x_1, ..., a_{t-1}, x_t as local-state
/// indices.
struct ToyHistory {
  std::vector<int> xs;
  std::vector<int> actions;

  std::size_t length() const { return actions.size(); }
  int current() const { return xs.back(); }
  void append(int a, int x) {
    actions.push_back(a);
    xs.push_back(x);
  }
};

/// Belief at t = 0 given x_0, unnormalized.
inline Belief initial_joint(const ToyDbn& d, int x0) {
  Belief b(static_cast<std::size_t>(d.num_states()), 0.0);
  for (int s = 0; s < d.num_states(); ++s) {
    if (d.local_index(s) == x0) b[static_cast<std::size_t>(s)] = d.prior(s);
  }
  return b;
}

/// One unnormalized predict-and-condition step.
inline Belief propagate_joint(const ToyDbn& d, const Belief& b, int a, int x_next) {
  const int n = d.num_states();
  Belief out(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    const double w = b[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    const double* row = d.transition_row(a, s);
    for (int s2 = 0; s2 < n; ++s2) out[static_cast<std::size_t>(s2)] += w * row[s2];
  }
  for (int s2 = 0; s2 < n; ++s2) {
    if (d.local_index(s2) != x_next) out[static_cast<std::size_t>(s2)] = 0.0;
  }
  return out;
}

inline double normalize(Belief& b) {
  double z = 0.0;
  for (double v : b) z += v;
  if (!(z > 0.0)) return z;
  for (double& v : b) v /= z;
  return z;
}

/// P(s_t | l_t) by exact forward filtering.
inline Belief filter_belief(const ToyDbn& d, const ToyHistory& h) {
  if (h.xs.size() != h.actions.size() + 1) throw ShapeError("toy history must hold one more state than actions");
  Belief b = initial_joint(d, h.xs[0]);
  if (!(normalize(b) > 0.0)) throw ZeroLikelihoodError("initial local state has zero prior probability");
  for (std::size_t t = 0; t < h.actions.size(); ++t) {
    b = propagate_joint(d, b, h.actions[t], h.xs[t + 1]);
    if (!(normalize(b) > 0.0)) {
      throw ZeroLikelihoodError("history has zero likelihood at step " + std::to_string(t + 1));
    }
  }
  return b;
}

/// Marginal of a belief onto the influence-source cell.
inline std::vector<double> influence_of_belief(const ToyDbn& d, const Belief& b) {
  std::vector<double> u(2, 0.0);
  for (int s = 0; s < d.num_states(); ++s) u[static_cast<std::size_t>(d.u_value(s))] += b[static_cast<std::size_t>(s)];
  return u;
}

/// I(u_t | l_t).
inline std::vector<double> exact_influence(const ToyDbn& d, const ToyHistory& h) {
  return influence_of_belief(d, filter_belief(d, h));
}

/// Next local state through the influence: sum_u T(x'|x,u,a) I(u|l).
inline std::vector<double> ialm_transition(const ToyDbn& d, const ToyHistory& h, int a) {
  const auto iu = exact_influence(d, h);
  const int x = h.current();
  std::vector<double> p(static_cast<std::size_t>(d.num_local_states()), 0.0);
  for (int x2 = 0; x2 < d.num_local_states(); ++x2) {
    for (int u = 0; u < 2; ++u) p[static_cast<std::size_t>(x2)] += d.local_transition(x2, x, u, a) * iu[static_cast<std::size_t>(u)];
  }
  return p;
}

/// Next local state by marginalizing the full transition over the belief.
inline std::vector<double> belief_transition(const ToyDbn& d, const ToyHistory& h, int a) {
  const Belief b = filter_belief(d, h);
  std::vector<double> p(static_cast<std::size_t>(d.num_local_states()), 0.0);
  for (int s = 0; s < d.num_states(); ++s) {
    const double w = b[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    const double* row = d.transition_row(a, s);
    for (int s2 = 0; s2 < d.num_states(); ++s2) p[static_cast<std::size_t>(d.local_index(s2))] += w * row[s2];
  }
  return p;
}

/// sum p ln(p/q), with 0 ln(0/q) = 0. Throws when q = 0 where p > 0.
inline double kl_categorical(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ShapeError("kl: support size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw ZeroLikelihoodError("kl: q has zero mass where p is positive (index " + std::to_string(i) + ")");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace ials::exact
