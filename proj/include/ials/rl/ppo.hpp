#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "ials/nn/adam.hpp"
#include "ials/rl/curve.hpp"
#include "ials/rl/evaluate.hpp"

namespace ials::rl {

struct PpoConfig {
  long total_steps = 200000;
  int horizon = 2048;
  int epochs = 4;
  int minibatch = 64;
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double ent_coef = 0.01;
  double vf_coef = 0.5;
  double lr = 3e-4;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  long eval_every = 10000;
  int eval_episodes = 10;
  bool record_time = true;  // false writes 0 wall-clock values for byte-stable curves
  PolicyConfig policy;

  void validate() const {
    if (total_steps < 0) throw ConfigError("ppo: total_steps must be >= 0");
    if (horizon < 1 || epochs < 1 || minibatch < 1) throw ConfigError("ppo: horizon, epochs and minibatch must be >= 1");
    if (!(clip > 0.0) || !(lr > 0.0)) throw ConfigError("ppo: clip and lr must be positive");
    if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0) throw ConfigError("ppo: gamma and lambda must be in [0, 1]");
    if (eval_every < 1 || eval_episodes < 1) throw ConfigError("ppo: eval_every and eval_episodes must be >= 1");
    policy.validate();
  }
};

inline void to_json(json& j, const PpoConfig& c) {
  j = {{"total_steps", c.total_steps}, {"horizon", c.horizon},
       {"epochs", c.epochs},           {"minibatch", c.minibatch},
       {"clip", c.clip},               {"gamma", c.gamma},
       {"lambda", c.lambda},           {"ent_coef", c.ent_coef},
       {"vf_coef", c.vf_coef},         {"lr", c.lr},
       {"max_grad_norm", c.max_grad_norm}, {"normalize_advantages", c.normalize_advantages},
       {"eval_every", c.eval_every},   {"eval_episodes", c.eval_episodes},
       {"record_time", c.record_time}, {"policy", c.policy}};
}

inline void from_json(const json& j, PpoConfig& c) {
  const PpoConfig d;
  c.total_steps = j.value("total_steps", d.total_steps);
  c.horizon = j.value("horizon", d.horizon);
  c.epochs = j.value("epochs", d.epochs);
  c.minibatch = j.value("minibatch", d.minibatch);
  c.clip = j.value("clip", d.clip);
  c.gamma = j.value("gamma", d.gamma);
  c.lambda = j.value("lambda", d.lambda);
  c.ent_coef = j.value("ent_coef", d.ent_coef);
  c.vf_coef = j.value("vf_coef", d.vf_coef);
  c.lr = j.value("lr", d.lr);
  c.max_grad_norm = j.value("max_grad_norm", d.max_grad_norm);
  c.normalize_advantages = j.value("normalize_advantages", d.normalize_advantages);
  c.eval_every = j.value("eval_every", d.eval_every);
  c.eval_episodes = j.value("eval_episodes", d.eval_episodes);
  c.record_time = j.value("record_time", d.record_time);
  c.policy = j.value("policy", d.policy);
  c.validate();
}

/// One rollout segment. Column t of `obs` is the stacked observation the
/// action at step t was chosen from.
struct RolloutBatch {
  Matrix obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
};

/// Generalized advantage estimates; returns = advantages + values. A done
/// flag at step t cuts bootstrapping from step t + 1.
inline void compute_gae(RolloutBatch& b, double last_value, double gamma, double lambda) {
  const std::size_t n = b.size();
  b.advantages.assign(n, 0.0);
  b.returns.assign(n, 0.0);
  double next_adv = 0.0, next_value = last_value;
  for (std::size_t t = n; t-- > 0;) {
    const double live = b.dones[t] ? 0.0 : 1.0;
    const double delta = b.rewards[t] + gamma * next_value * live - b.values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    b.advantages[t] = next_adv;
    b.returns[t] = next_adv + b.values[t];
    next_value = b.values[t];
  }
}

inline std::vector<double> normalized(const std::vector<double>& a) {
  if (a.empty()) return a;
  const double n = static_cast<double>(a.size());
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : a) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - mean) / (sd + 1e-8);
  return out;
}

struct LossParts {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

/// Clipped-surrogate loss on the columns `idx` of a batch:
///   -mean(min(r A, clip(r) A)) + vf_coef mean((V - R)^2) - ent_coef mean(H).
/// With `backward`, accumulates parameter gradients.
inline LossParts ppo_loss(PolicyNet& net, const RolloutBatch& b, const std::vector<double>& adv,
                          const std::vector<std::size_t>& idx, const PpoConfig& cfg, bool backward) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  const int na = net.num_actions();
  Matrix x(b.obs.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) x.col(j) = b.obs.col(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
  std::vector<nn::DenseCache> ac, cc;
  const Matrix z = net.actor().forward(x, ac);
  const Matrix v = net.critic().forward(x, cc);
  const Matrix p = nn::softmax_columns(z);

  LossParts out;
  Matrix dz = Matrix::Zero(na, m);
  Matrix dv = Matrix::Zero(1, m);
  const double inv = 1.0 / static_cast<double>(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::size_t i = idx[static_cast<std::size_t>(j)];
    const int a = b.actions[i];
    const double logp = std::log(std::max(p(a, j), 1e-300));
    const double ratio = std::exp(logp - b.log_probs[i]);
    const double A = adv[i];
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const bool use_unclipped = ratio * A <= clipped * A;
    out.policy -= std::min(ratio * A, clipped * A) * inv;
    if (!use_unclipped) out.clip_fraction += inv;

    double h = 0.0;
    for (int c = 0; c < na; ++c) {
      if (p(c, j) > 0.0) h -= p(c, j) * std::log(p(c, j));
    }
    out.entropy += h * inv;
    const double err = v(0, j) - b.returns[i];
    out.value += err * err * inv;

    if (backward) {
      const double dlogp = use_unclipped ? -A * ratio * inv : 0.0;
      for (int c = 0; c < na; ++c) {
        const double pc = p(c, j);
        const double logpc = pc > 0.0 ? std::log(pc) : 0.0;
        dz(c, j) = dlogp * ((c == a ? 1.0 : 0.0) - pc) + cfg.ent_coef * inv * pc * (logpc + h);
      }
      dv(0, j) = cfg.vf_coef * 2.0 * err * inv;
    }
  }
  out.total = out.policy + cfg.vf_coef * out.value - cfg.ent_coef * out.entropy;
  if (backward) {
    net.actor().backward(dz, ac);
    net.critic().backward(dv, cc);
  }
  return out;
}

struct RunInfo {
  std::string sim_kind = "gs";
  double aip_offset_s = 0.0;  // influence-predictor preparation time
};

struct TrainOutcome {
  PolicyNet policy;
  LearningCurve curve;
  long env_steps = 0;
  long updates = 0;
  double train_seconds = 0.0;  // excludes evaluation
};

inline std::string config_hash(const PpoConfig& cfg, const std::string& sim_kind, const std::string& env_id) {
  const json j = {{"ppo", cfg}, {"sim_kind", sim_kind}, {"env_id", env_id}};
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(derive_seed(0, j.dump())));
  return buf;
}

/// Clipped-surrogate actor-critic training on `sim` with periodic greedy
/// evaluation on `eval_env`. The outcome is a pure function of (config, seed)
/// apart from wall-clock values.
inline TrainOutcome train_policy(Simulator& sim, Simulator& eval_env, const PpoConfig& cfg, std::uint64_t seed,
                                 const RunInfo& info = {}) {
  cfg.validate();
  const auto& desc = sim.descriptor();
  if (!desc.same_interface(eval_env.descriptor())) {
    throw ConfigError("train_policy: training and evaluation simulators have different interfaces");
  }
  const Rng root(seed);
  Rng init_rng = root.split("init");
  Rng act_rng = root.split("act");
  Rng shuffle_rng = root.split("shuffle");
  const Rng env_root = root.split("env");
  const std::uint64_t eval_seed = root.split("eval").next_u64();

  TrainOutcome out{PolicyNet(desc.obs_width, desc.num_actions, cfg.policy), {}, 0, 0, 0.0};
  PolicyNet& net = out.policy;
  net.init(init_rng);
  const auto params = net.parameters();
  nn::Adam opt(params, nn::AdamConfig{cfg.lr});
  out.curve.sim_kind = info.sim_kind;
  out.curve.env_id = desc.env_id;
  out.curve.seed = seed;
  out.curve.config_hash = config_hash(cfg, info.sim_kind, desc.env_id);
  out.curve.aip_offset_s = info.aip_offset_s;

  double clock = 0.0;
  auto since = std::chrono::steady_clock::now();
  auto pause = [&] {
    clock += std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
  };
  auto resume = [&] { since = std::chrono::steady_clock::now(); };
  auto record = [&] {
    pause();
    const auto r = evaluate(net, eval_env, cfg.eval_episodes, eval_seed);
    const double wall = cfg.record_time ? info.aip_offset_s + clock : 0.0;
    out.curve.points.push_back({wall, out.env_steps, r.mean, r.std_error});
    resume();
  };
  record();

  std::uint64_t episode = 0;
  ObsStack stack = net.make_stack();
  stack.push(sim.reset(env_root.split("episode", episode++).next_u64()));
  const int na = desc.num_actions;
  std::vector<double> probs(static_cast<std::size_t>(na));

  while (out.env_steps < cfg.total_steps) {
    const long n = std::min<long>(cfg.horizon, cfg.total_steps - out.env_steps);
    RolloutBatch b;
    b.obs.resize(net.input_width(), n);
    b.actions.reserve(static_cast<std::size_t>(n));
    for (long t = 0; t < n; ++t) {
      const Vector& x = stack.features();
      b.obs.col(t) = x;
      const Matrix z = net.logits(x);
      const Matrix pz = nn::softmax_columns(z);
      for (int c = 0; c < na; ++c) probs[static_cast<std::size_t>(c)] = pz(c, 0);
      const int a = act_rng.categorical(probs);
      b.actions.push_back(a);
      b.log_probs.push_back(std::log(std::max(probs[static_cast<std::size_t>(a)], 1e-300)));
      b.values.push_back(net.values(x)(0, 0));
      auto r = sim.step(Action{a});
      b.rewards.push_back(r.reward);
      b.dones.push_back(r.done ? 1 : 0);
      ++out.env_steps;
      if (r.done) {
        stack.clear();
        stack.push(sim.reset(env_root.split("episode", episode++).next_u64()));
      } else {
        stack.push(r.observation);
      }
      if (out.env_steps % cfg.eval_every == 0) record();
    }
    compute_gae(b, net.values(stack.features())(0, 0), cfg.gamma, cfg.lambda);
    const std::vector<double> adv = cfg.normalize_advantages ? normalized(b.advantages) : b.advantages;

    std::vector<std::size_t> order(b.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i)))]);
      }
      for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.minibatch)) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(s),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + static_cast<std::size_t>(cfg.minibatch))));
        opt.zero_grad();
        const auto loss = ppo_loss(net, b, adv, idx, cfg, true);
        if (!std::isfinite(loss.total)) {
          char msg[256];
          std::snprintf(msg, sizeof msg,
                        "ppo: non-finite loss at update %ld (policy %g, value %g, entropy %g) after %ld env steps",
                        out.updates, loss.policy, loss.value, loss.entropy, out.env_steps);
          throw NumericError(msg);
        }
        nn::clip_grad_norm(params, cfg.max_grad_norm);
        opt.step();
      }
    }
    ++out.updates;
  }
  if (out.curve.points.back().env_steps != out.env_steps) record();
  pause();
  out.train_seconds = clock;
  return out;
}

}  // namespace ials::rl
