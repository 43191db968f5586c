#pragma once

#include <cmath>

#include "ials/rl/policy.hpp"

namespace ials::rl {

struct EvalResult {
  double mean = 0.0;
  double std_error = 0.0;
  int episodes = 0;
};

/// Mean undiscounted episode return of a policy over `episodes` episodes.
/// Episode e is reset with a seed derived from (seed, e).
inline EvalResult evaluate(Policy& policy, Simulator& env, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  const Rng root(seed);
  Rng act_rng = root.split("act");
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    Observation obs = env.reset(root.split("episode", static_cast<std::uint64_t>(e)).next_u64());
    policy.begin_episode();
    double total = 0.0;
    for (;;) {
      auto r = env.step(policy.act(obs, act_rng));
      total += r.reward;
      if (r.done) break;
      obs = std::move(r.observation);
    }
    returns.push_back(total);
  }
  EvalResult res;
  res.episodes = episodes;
  for (double r : returns) res.mean += r;
  res.mean /= static_cast<double>(episodes);
  if (episodes > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - res.mean) * (r - res.mean);
    res.std_error = std::sqrt(ss / static_cast<double>(episodes - 1)) / std::sqrt(static_cast<double>(episodes));
  }
  return res;
}

/// Greedy evaluation of a policy network.
inline EvalResult evaluate(const PolicyNet& net, Simulator& env, int episodes, std::uint64_t seed) {
  net.require_matches(env.descriptor());
  GreedyPolicy p(net);
  return evaluate(p, env, episodes, seed);
}

}  // namespace ials::rl
