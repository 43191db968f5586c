#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/exact/checks.hpp"
#include "ials/nn/gradcheck.hpp"
#include "ials/nn/gru.hpp"
#include "ials/nn/heads.hpp"
#include "ials/rl/ppo.hpp"
#include "ials/traffic/traffic.hpp"
#include "ials/warehouse/simulators.hpp"

namespace ials::verify {

using json = nlohmann::json;

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;
  std::string detail;

  json to_json() const { return {{"name", name}, {"passed", passed}, {"metric", metric}, {"detail", detail}}; }
};

inline std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

/// Steps a global and a local simulator side by side from the same seeds,
/// feeding the local one the realized influence. Returns the number of
/// mismatching steps (observation, reward, done or d-set row).
inline long replay_mismatches(GlobalSimulator& gs, LocalSimulator& ls, int episodes, std::uint64_t seed) {
  Rng rng(seed);
  const int na = gs.descriptor().num_actions;
  long bad = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    const auto s = rng.next_u64();
    bad += !(gs.reset(s) == ls.reset(s));
    bad += !(gs.dset_row() == ls.dset_row());
    for (bool done = false; !done;) {
      const Action a{rng.uniform_int(na)};
      const auto rg = gs.step(a);
      const auto rl = ls.step(a, gs.last_influence());
      bad += !(rg.observation == rl.observation) || rg.reward != rl.reward || rg.done != rl.done ||
             !(gs.dset_row() == ls.dset_row());
      done = rg.done;
    }
  }
  return bad;
}

/// Runs the same random-action episodes on two fresh simulators and counts
/// differing steps.
inline long determinism_mismatches(const SimulatorFactory& make, int episodes, std::uint64_t seed) {
  auto a = make(), b = make();
  Rng ra(seed), rb(seed);
  const int na = a->descriptor().num_actions;
  long bad = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    const auto sa = ra.next_u64(), sb = rb.next_u64();
    bad += !(a->reset(sa) == b->reset(sb));
    for (bool done = false; !done;) {
      const Action x{ra.uniform_int(na)}, y{rb.uniform_int(na)};
      const auto p = a->step(x), q = b->step(y);
      bad += !(p.observation == q.observation) || p.reward != q.reward || p.done != q.done;
      done = p.done;
    }
  }
  return bad;
}

inline nn::Matrix random_matrix(Rng& rng, int rows, int cols) {
  nn::Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = 2.0 * rng.uniform() - 1.0;
  }
  return m;
}

inline double mlp_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  nn::Mlp net("m", 4, {8}, 2, nn::Activation::tanh);
  net.init(rng);
  const nn::Matrix x = random_matrix(rng, 4, 3);
  const std::vector<std::vector<int>> targets{{0, 1, 1}};
  auto loss = [&] { return nn::batch_cross_entropy({nn::softmax_columns(net.forward(x))}, targets); };
  auto analytic = [&] {
    nn::zero_grads(net.parameters());
    std::vector<nn::DenseCache> caches;
    const nn::Matrix logits = net.forward(x, caches);
    std::vector<nn::Matrix> dl;
    nn::batch_cross_entropy({nn::softmax_columns(logits)}, targets, &dl);
    net.backward(dl[0], caches);
  };
  return nn::gradient_check(net.parameters(), loss, analytic).max_rel_error;
}

inline double gru_gradcheck(int length, std::uint64_t seed) {
  Rng rng(seed);
  const int hidden = 4;
  nn::GruCell cell("g", 3, hidden);
  cell.init(rng);
  nn::MultiHeadSoftmax heads("h", hidden, {4, 2});
  heads.init(rng);
  std::vector<nn::Matrix> xs;
  for (int t = 0; t < length; ++t) xs.push_back(random_matrix(rng, 3, 2));
  const std::vector<std::vector<int>> targets{{3, 0}, {1, 1}};
  nn::ParameterList params = cell.parameters();
  for (auto* p : heads.parameters()) params.push_back(p);
  auto loss = [&] {
    std::vector<nn::GruStepCache> caches;
    const nn::Matrix h = nn::gru_unroll(cell, xs, nn::Matrix::Zero(hidden, 2), caches);
    return nn::batch_cross_entropy(heads.forward(h), targets);
  };
  auto analytic = [&] {
    nn::zero_grads(params);
    std::vector<nn::GruStepCache> caches;
    const nn::Matrix h = nn::gru_unroll(cell, xs, nn::Matrix::Zero(hidden, 2), caches);
    std::vector<nn::DenseCache> hc;
    std::vector<nn::Matrix> dl;
    nn::batch_cross_entropy(heads.forward(h, hc), targets, &dl);
    nn::gru_backward_through_time(cell, heads.backward(dl, hc), caches);
  };
  return nn::gradient_check(params, loss, analytic).max_rel_error;
}

inline double ppo_gradcheck(std::uint64_t seed) {
  rl::PolicyConfig pc;
  pc.k_pi = 2;
  pc.hidden = {5, 4};
  rl::PolicyNet net(3, 3, pc);
  Rng rng(seed);
  net.init(rng);
  net.actor().layers().back().weight.init_uniform(rng, 0.8);
  rl::RolloutBatch b;
  const int n = 16;
  b.obs = random_matrix(rng, 6, n);
  const nn::Matrix p = nn::softmax_columns(net.logits(b.obs));
  for (int j = 0; j < n; ++j) {
    const int a = rng.uniform_int(3);
    b.actions.push_back(a);
    const double shift = (j % 3 == 0) ? 0.6 : (j % 3 == 1 ? -0.6 : 0.05 * (rng.uniform() - 0.5));
    b.log_probs.push_back(std::log(p(a, j)) + shift);
    b.returns.push_back(2.0 * rng.uniform() - 1.0);
  }
  std::vector<double> adv(n);
  for (auto& v : adv) v = 2.0 * rng.uniform() - 1.0;
  std::vector<std::size_t> idx(n);
  for (int j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = static_cast<std::size_t>(j);
  const rl::PpoConfig cfg;
  const auto params = net.parameters();
  return nn::gradient_check(
             params, [&] { return rl::ppo_loss(net, b, adv, idx, cfg, false).total; },
             [&] {
               nn::zero_grads(params);
               rl::ppo_loss(net, b, adv, idx, cfg, true);
             })
      .max_rel_error;
}

// --- individual checks -----------------------------------------------------

/// Influence route vs full-belief route on random toy histories.
inline CheckResult check_transition_routes(std::uint64_t seed = 0, int histories = 100) {
  const auto d = exact::make_chain(6, derive_seed(seed, "routes"));
  const auto r = exact::check_eq1_eq2(d, histories, 6, seed);
  return {"transition_routes", r.max_abs_diff <= 1e-10 && r.histories == histories, r.max_abs_diff,
          fmt("max |diff| %.3g over %.0f histories", r.max_abs_diff, r.histories)};
}

inline CheckResult check_finite_memory(int k) {
  const auto d = exact::make_finite_memory(6, 15);
  const auto r = exact::check_theorem1(d, k, 5);
  return {"finite_memory_k" + std::to_string(k), r.passed(1e-8), r.max_q_diff,
          std::string(r.applicable ? "" : "precondition not met; ") + fmt("max Q diff %.3g, greedy agree %.0f", r.max_q_diff, r.greedy_agree)};
}

inline CheckResult check_policy_shift_kl(std::uint64_t seed = 0, int pairs = 20) {
  const auto d = exact::make_split(6, 19, false);
  Rng rng = Rng(seed).split("policy-pairs");
  int holds = 0;
  double worst = -1e300;
  for (int i = 0; i < pairs; ++i) {
    const auto r = exact::check_prop3_and_cor4(d, {rng.next_u64()}, {rng.next_u64()}, 4);
    holds += r.inequality_holds() && r.kl_lu > 0.0;
    worst = std::max(worst, r.kl_du - r.kl_lu);
  }
  return {"dset_kl_bound", holds == pairs, worst, fmt("%.0f of %.0f pairs satisfy KL(d,u) <= KL(l,u)", holds, pairs)};
}

inline CheckResult check_exogenous_dset_invariance(std::uint64_t seed = 0) {
  const auto d = exact::make_split(6, 20, true);
  Rng rng = Rng(seed).split("exogenous");
  double max_du = 0.0, min_lu = 1e300;
  for (int i = 0; i < 5; ++i) {
    const auto r = exact::check_prop3_and_cor4(d, {rng.next_u64()}, {rng.next_u64()}, 4);
    max_du = std::max(max_du, std::abs(r.kl_du));
    min_lu = std::min(min_lu, r.kl_lu);
  }
  return {"exogenous_dset_invariance", max_du < 1e-12 && min_lu > 0.0, max_du,
          fmt("max KL(d,u) %.3g, min KL(l,u) %.3g", max_du, min_lu)};
}

inline CheckResult check_gradients() {
  const double m = mlp_gradcheck(7), g = gru_gradcheck(8, 10), p = ppo_gradcheck(4);
  const double worst = std::max({m, g, p});
  return {"gradients", worst < 1e-4, worst,
          fmt("mlp %.3g, gru(8) %.3g", m, g) + fmt(", ppo loss %.3g", p)};
}

inline CheckResult check_replays(std::uint64_t seed = 0) {
  long bad = 0;
  {
    warehouse::WarehouseGlobalSimulator gs({});
    warehouse::WarehouseLocalSimulator ls({});
    bad += replay_mismatches(gs, ls, 10, seed);
  }
  {
    const auto cfg = warehouse::WarehouseConfig::fixed_lifetime(8);
    warehouse::WarehouseGlobalSimulator gs(cfg);
    warehouse::WarehouseLocalSimulator ls(cfg);
    bad += replay_mismatches(gs, ls, 10, seed + 1);
  }
  {
    traffic::TrafficGlobalSimulator gs({});
    traffic::TrafficLocalSimulator ls({});
    bad += replay_mismatches(gs, ls, 5, seed + 2);
  }
  {
    auto d = std::make_shared<const exact::ToyDbn>(exact::make_chain(6, 3));
    exact::ToyGlobalSimulator gs(d);
    exact::ToyLocalSimulator ls(d);
    bad += replay_mismatches(gs, ls, 50, seed + 3);
  }
  return {"gs_ls_replay", bad == 0, static_cast<double>(bad), fmt("%.0f mismatching steps", static_cast<double>(bad))};
}

inline CheckResult check_determinism(std::uint64_t seed = 0) {
  long bad = 0;
  bad += determinism_mismatches([] { return std::make_unique<warehouse::WarehouseGlobalSimulator>(warehouse::WarehouseConfig{}); }, 3, seed);
  bad += determinism_mismatches([] { return std::make_unique<traffic::TrafficGlobalSimulator>(traffic::TrafficConfig{}); }, 2, seed);
  // a short training run twice
  auto d = std::make_shared<const exact::ToyDbn>(exact::make_chain(6, 3));
  rl::PpoConfig cfg;
  cfg.total_steps = 512;
  cfg.horizon = 128;
  cfg.eval_every = 256;
  cfg.eval_episodes = 3;
  cfg.record_time = false;
  cfg.policy.k_pi = 2;
  cfg.policy.hidden = {8};
  std::vector<rl::TrainOutcome> runs;
  for (int i = 0; i < 2; ++i) {
    exact::ToyGlobalSimulator sim(d), eval(d);
    runs.push_back(rl::train_policy(sim, eval, cfg, seed));
  }
  const auto pa = runs[0].policy.parameters(), pb = runs[1].policy.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) bad += pa[i]->value != pb[i]->value;
  for (std::size_t i = 0; i < runs[0].curve.points.size(); ++i) {
    bad += runs[0].curve.points[i].mean_return != runs[1].curve.points[i].mean_return;
  }
  return {"determinism", bad == 0, static_cast<double>(bad), fmt("%.0f differences", static_cast<double>(bad))};
}

/// Every exact and numerical check, in a fixed order.
inline std::vector<CheckResult> run_suite(std::uint64_t seed = 0) {
  std::vector<std::function<CheckResult()>> checks{
      [&] { return check_transition_routes(seed); },
      [] { return check_finite_memory(1); },
      [] { return check_finite_memory(2); },
      [&] { return check_policy_shift_kl(seed); },
      [&] { return check_exogenous_dset_invariance(seed); },
      [] { return check_gradients(); },
      [&] { return check_replays(seed); },
      [&] { return check_determinism(seed); },
  };
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      out.push_back(checks[i]());
    } catch (const Error& e) {
      out.push_back({"check_" + std::to_string(i), false, 0.0, std::string("error: ") + e.what()});
    }
  }
  return out;
}

}  // namespace ials::verify
