#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ials/exact/inference.hpp"
#include "ials/exact/toy_sim.hpp"

namespace ials::exact {

/// Draws a history of `steps` transitions from the simulator under uniform
/// random actions. Such histories always have positive likelihood.
inline ToyHistory sample_history(const ToyDbn& d, int steps, Rng& rng) {
  auto shared = std::make_shared<ToyDbn>(d);
  shared->episode_length = std::max(steps, 1);
  ToyGlobalSimulator gs(shared);
  gs.reset(rng.next_u64());
  ToyHistory h;
  h.xs.push_back(shared->local_index(gs.state()));
  for (int t = 0; t < steps; ++t) {
    const int a = rng.uniform_int(d.num_actions);
    gs.step(Action{a});
    h.append(a, shared->local_index(gs.state()));
  }
  return h;
}

struct Eq12Report {
  int histories = 0;
  double max_abs_diff = 0.0;
};

/// Compares the influence route against full-belief marginalization on random
/// histories of length 0..max_steps.
inline Eq12Report check_eq1_eq2(const ToyDbn& d, int histories, int max_steps, std::uint64_t seed) {
  Rng rng = Rng(seed).split("eq12");
  Eq12Report rep;
  for (int i = 0; i < histories; ++i) {
    const auto h = sample_history(d, rng.uniform_int(max_steps + 1), rng);
    for (int a = 0; a < d.num_actions; ++a) {
      const auto p2 = ialm_transition(d, h, a);
      const auto p1 = belief_transition(d, h, a);
      for (std::size_t j = 0; j < p1.size(); ++j) rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(p1[j] - p2[j]));
    }
    ++rep.histories;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Finite-memory sufficiency

struct Theorem1Report {
  int k = 0;
  int horizon = 0;
  bool applicable = false;
  double precondition_spread = 0.0;  // max |I(u|l) - I(u|window)| over reachable histories
  double max_q_diff = 0.0;
  bool greedy_agree = true;
  int windows = 0;
  double value_full = 0.0;      // expected return from t = 0 under route (a)
  double value_windowed = 0.0;  // same under route (b)

  bool passed(double tol = 1e-8) const { return applicable && max_q_diff <= tol && greedy_agree; }
};

namespace detail {

struct HistNode {
  std::vector<int> seq;  // x0, a0, x1, ..., x_t
  Belief joint;          // P^{pi0}(h, s_t)
  double prob = 0.0;
  std::vector<double> iu;
  int window = -1;
  std::vector<int> child;  // [a * nX + x'] -> index at next level, -1 if unreachable
};

inline std::vector<int> window_key(const std::vector<int>& seq, int k) {
  // seq has 2t+1 entries; keep the last min(k, t) (a, x) pairs plus the state before them
  const int t = static_cast<int>(seq.size() / 2);
  const int m = std::min(k, t);
  return {seq.end() - (2 * m + 1), seq.end()};
}

}  // namespace detail

/// Computes Q-values of greedy k-window policies two ways and compares them.
///
/// Route (a) works on full histories with exact filtering. Window Q-values are
/// history Q-values averaged under the exploratory (uniform) policy's history
/// distribution. Route (b) solves the windowed model whose influence is the
/// exploratory-policy marginal I(u | window).
inline Theorem1Report check_theorem1(const ToyDbn& d, int k, int horizon) {
  if (k < 1 || horizon < 1) throw ConfigError("check_theorem1: k and horizon must be >= 1");
  const int nx = d.num_local_states();
  const int na = d.num_actions;
  const double pa = 1.0 / na;

  std::vector<std::vector<detail::HistNode>> levels(static_cast<std::size_t>(horizon));
  for (int x0 = 0; x0 < nx; ++x0) {
    detail::HistNode n;
    n.seq = {x0};
    n.joint = initial_joint(d, x0);
    for (double v : n.joint) n.prob += v;
    if (n.prob > 0.0) levels[0].push_back(std::move(n));
  }
  for (int t = 0; t + 1 < horizon; ++t) {
    auto& cur = levels[static_cast<std::size_t>(t)];
    auto& nxt = levels[static_cast<std::size_t>(t + 1)];
    for (auto& node : cur) {
      node.child.assign(static_cast<std::size_t>(na * nx), -1);
      for (int a = 0; a < na; ++a) {
        for (int x2 = 0; x2 < nx; ++x2) {
          detail::HistNode c;
          c.joint = propagate_joint(d, node.joint, a, x2);
          for (double& v : c.joint) v *= pa;
          for (double v : c.joint) c.prob += v;
          if (!(c.prob > 0.0)) continue;
          c.seq = node.seq;
          c.seq.push_back(a);
          c.seq.push_back(x2);
          node.child[static_cast<std::size_t>(a * nx + x2)] = static_cast<int>(nxt.size());
          nxt.push_back(std::move(c));
        }
      }
    }
  }

  // windows, their exploratory-policy weight and marginal influence
  std::vector<std::map<std::vector<int>, int>> wid(static_cast<std::size_t>(horizon));
  std::vector<std::vector<double>> wprob(static_cast<std::size_t>(horizon));
  std::vector<std::vector<std::vector<double>>> wiu(static_cast<std::size_t>(horizon));
  std::vector<std::vector<std::vector<int>>> wkeys(static_cast<std::size_t>(horizon));
  Theorem1Report rep;
  rep.k = k;
  rep.horizon = horizon;
  for (int t = 0; t < horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    for (auto& node : levels[ts]) {
      Belief b = node.joint;
      normalize(b);
      node.iu = influence_of_belief(d, b);
      const auto key = detail::window_key(node.seq, k);
      auto [it, inserted] = wid[ts].emplace(key, static_cast<int>(wprob[ts].size()));
      if (inserted) {
        wprob[ts].push_back(0.0);
        wiu[ts].push_back({0.0, 0.0});
        wkeys[ts].push_back(key);
      }
      node.window = it->second;
      const auto w = static_cast<std::size_t>(node.window);
      wprob[ts][w] += node.prob;
      for (int u = 0; u < 2; ++u) wiu[ts][w][static_cast<std::size_t>(u)] += node.prob * node.iu[static_cast<std::size_t>(u)];
    }
    for (std::size_t w = 0; w < wprob[ts].size(); ++w) {
      for (auto& v : wiu[ts][w]) v /= wprob[ts][w];
    }
    for (const auto& node : levels[ts]) {
      const auto& wi = wiu[ts][static_cast<std::size_t>(node.window)];
      rep.precondition_spread = std::max(rep.precondition_spread, std::abs(node.iu[0] - wi[0]));
    }
    rep.windows += static_cast<int>(wprob[ts].size());
  }
  rep.applicable = rep.precondition_spread <= 1e-12;

  // route (a): backward induction over histories with window-greedy play
  std::vector<std::vector<std::vector<double>>> qh(static_cast<std::size_t>(horizon));
  std::vector<std::vector<std::vector<double>>> qa(static_cast<std::size_t>(horizon));
  std::vector<std::vector<int>> greedy_a(static_cast<std::size_t>(horizon));
  auto argmax = [](const std::vector<double>& q) {
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
  };
  for (int t = horizon - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    auto& lvl = levels[ts];
    qh[ts].assign(lvl.size(), std::vector<double>(static_cast<std::size_t>(na), 0.0));
    qa[ts].assign(wprob[ts].size(), std::vector<double>(static_cast<std::size_t>(na), 0.0));
    for (std::size_t i = 0; i < lvl.size(); ++i) {
      const auto& node = lvl[i];
      const int x = node.seq.back();
      for (int a = 0; a < na; ++a) {
        double q = d.reward_of(x, a);
        if (t + 1 < horizon) {
          for (int x2 = 0; x2 < nx; ++x2) {
            const int ci = node.child[static_cast<std::size_t>(a * nx + x2)];
            if (ci < 0) continue;
            const auto& c = levels[ts + 1][static_cast<std::size_t>(ci)];
            const double p = c.prob / (node.prob * pa);
            const int ga = greedy_a[ts + 1][static_cast<std::size_t>(c.window)];
            q += p * qh[ts + 1][static_cast<std::size_t>(ci)][static_cast<std::size_t>(ga)];
          }
        }
        qh[ts][i][static_cast<std::size_t>(a)] = q;
        qa[ts][static_cast<std::size_t>(node.window)][static_cast<std::size_t>(a)] += node.prob * q;
      }
    }
    greedy_a[ts].resize(wprob[ts].size());
    for (std::size_t w = 0; w < wprob[ts].size(); ++w) {
      for (auto& v : qa[ts][w]) v /= wprob[ts][w];
      greedy_a[ts][w] = argmax(qa[ts][w]);
    }
  }

  // route (b): the windowed model
  std::vector<std::vector<std::vector<double>>> qb(static_cast<std::size_t>(horizon));
  for (int t = horizon - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    qb[ts].assign(wprob[ts].size(), std::vector<double>(static_cast<std::size_t>(na), 0.0));
    for (std::size_t w = 0; w < wprob[ts].size(); ++w) {
      const auto& key = wkeys[ts][w];
      const int x = key.back();
      for (int a = 0; a < na; ++a) {
        double q = d.reward_of(x, a);
        if (t + 1 < horizon) {
          for (int x2 = 0; x2 < nx; ++x2) {
            double p = 0.0;
            for (int u = 0; u < 2; ++u) p += d.local_transition(x2, x, u, a) * wiu[ts][w][static_cast<std::size_t>(u)];
            if (p == 0.0) continue;
            std::vector<int> seq = key;
            seq.push_back(a);
            seq.push_back(x2);
            const auto& m = wid[ts + 1];
            auto it = m.find(detail::window_key(seq, k));
            if (it == m.end()) throw StateError("check_theorem1: successor window not reachable");
            q += p * *std::max_element(qb[ts + 1][static_cast<std::size_t>(it->second)].begin(),
                                       qb[ts + 1][static_cast<std::size_t>(it->second)].end());
          }
        }
        qb[ts][w][static_cast<std::size_t>(a)] = q;
      }
    }
  }

  for (int t = 0; t < horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    for (std::size_t w = 0; w < qa[ts].size(); ++w) {
      for (int a = 0; a < na; ++a) {
        rep.max_q_diff = std::max(rep.max_q_diff, std::abs(qa[ts][w][static_cast<std::size_t>(a)] - qb[ts][w][static_cast<std::size_t>(a)]));
      }
      const int ga = argmax(qa[ts][w]);
      const int gb = argmax(qb[ts][w]);
      if (ga != gb && std::abs(qa[ts][w][static_cast<std::size_t>(ga)] - qa[ts][w][static_cast<std::size_t>(gb)]) > 1e-9) {
        rep.greedy_agree = false;
      }
    }
  }
  for (std::size_t w = 0; w < qa[0].size(); ++w) {
    const double p0 = wprob[0][w];
    rep.value_full += p0 * *std::max_element(qa[0][w].begin(), qa[0][w].end());
    rep.value_windowed += p0 * *std::max_element(qb[0][w].begin(), qb[0][w].end());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Policy-shift bounds on d-set joints

/// Stochastic history-dependent policy for two actions: P(a = 1 | l) is a hash
/// of (seed, l) mapped into [0.1, 0.9].
struct HashedPolicy {
  std::uint64_t seed = 0;

  double p_one(const std::vector<int>& seq) const {
    std::uint64_t h = ::ials::detail::mix64(seed ^ 0x5bd1e995ULL);
    for (int v : seq) h = ::ials::detail::mix64(h ^ static_cast<std::uint64_t>(v + 1));
    return 0.1 + 0.8 * (static_cast<double>(h >> 11) * 0x1.0p-53);
  }
  double prob(const std::vector<int>& seq, int a) const { return a == 1 ? p_one(seq) : 1.0 - p_one(seq); }
};

struct Prop3Report {
  double kl_lu = 0.0;
  double kl_du = 0.0;
  double chain_rule_residual = 0.0;  // |KL(l,u) - KL(d,u) - E KL(l | d,u)|
  int histories = 0;
  int dsets = 0;

  bool inequality_holds() const { return kl_du <= kl_lu + 1e-15; }
};

/// Exact joints P^pi(l_t, u_t) and P^pi(d_t, u_t) for two policies, compared by KL.
inline Prop3Report check_prop3_and_cor4(const ToyDbn& d, const HashedPolicy& pi0, const HashedPolicy& pi1, int t) {
  if (d.num_actions != 2) throw ConfigError("check_prop3_and_cor4: two-action instances only");
  if (t < 0 || t > 5) throw ConfigError("check_prop3_and_cor4: t must be in [0, 5]");
  const int nx = d.num_local_states();

  struct Leaf {
    std::vector<int> seq;
    Belief joint;  // P(x_{0:t}, s_t | a_{0:t-1})
    double w0 = 1.0, w1 = 1.0;
  };
  std::vector<Leaf> cur;
  for (int x0 = 0; x0 < nx; ++x0) {
    Leaf l;
    l.seq = {x0};
    l.joint = initial_joint(d, x0);
    cur.push_back(std::move(l));
  }
  for (int step = 0; step < t; ++step) {
    std::vector<Leaf> nxt;
    nxt.reserve(cur.size() * static_cast<std::size_t>(2 * nx));
    for (const auto& l : cur) {
      for (int a = 0; a < 2; ++a) {
        const double p0 = pi0.prob(l.seq, a);
        const double p1 = pi1.prob(l.seq, a);
        for (int x2 = 0; x2 < nx; ++x2) {
          Leaf c;
          c.seq = l.seq;
          c.seq.push_back(a);
          c.seq.push_back(x2);
          c.joint = propagate_joint(d, l.joint, a, x2);
          c.w0 = l.w0 * p0;
          c.w1 = l.w1 * p1;
          nxt.push_back(std::move(c));
        }
      }
    }
    cur = std::move(nxt);
  }

  // (l, u) joints, and their grouping by (d, u)
  std::vector<double> plu0, plu1;
  std::map<std::vector<int>, int> dindex;
  std::vector<int> group;  // (l,u) entry -> (d,u) entry
  for (const auto& l : cur) {
    double pu[2] = {0.0, 0.0};
    for (int s = 0; s < d.num_states(); ++s) pu[d.u_value(s)] += l.joint[static_cast<std::size_t>(s)];
    std::vector<int> dkey;
    for (std::size_t i = 0; i < l.seq.size(); i += 2) {
      const int prev_a = i == 0 ? -1 : l.seq[i - 1];
      for (auto b : d.dset_bits(l.seq[i], prev_a)) dkey.push_back(b);
    }
    auto [it, inserted] = dindex.emplace(dkey, static_cast<int>(dindex.size()));
    for (int u = 0; u < 2; ++u) {
      plu0.push_back(l.w0 * pu[u]);
      plu1.push_back(l.w1 * pu[u]);
      group.push_back(it->second * 2 + u);
    }
  }
  const std::size_t ndu = dindex.size() * 2;
  std::vector<double> pdu0(ndu, 0.0), pdu1(ndu, 0.0);
  for (std::size_t i = 0; i < plu0.size(); ++i) {
    pdu0[static_cast<std::size_t>(group[i])] += plu0[i];
    pdu1[static_cast<std::size_t>(group[i])] += plu1[i];
  }

  Prop3Report rep;
  rep.histories = static_cast<int>(cur.size());
  rep.dsets = static_cast<int>(dindex.size());
  rep.kl_lu = kl_categorical(plu0, plu1);
  rep.kl_du = kl_categorical(pdu0, pdu1);
  // E_{P0(d,u)} KL(P0(l | d,u) || P1(l | d,u))
  double cond = 0.0;
  for (std::size_t i = 0; i < plu0.size(); ++i) {
    const auto g = static_cast<std::size_t>(group[i]);
    if (plu0[i] <= 0.0) continue;
    const double c0 = plu0[i] / pdu0[g];
    const double c1 = plu1[i] / pdu1[g];
    cond += pdu0[g] * c0 * std::log(c0 / c1);
  }
  rep.chain_rule_residual = std::abs(rep.kl_lu - rep.kl_du - cond);
  return rep;
}

}  // namespace ials::exact
