#pragma once

#include <memory>
#include <string>

#include "ials/aip/train.hpp"
#include "ials/traffic/traffic.hpp"

namespace ials::traffic {

/// Copy of a confounded-mode dataset without the trailing light bit.
inline aip::InfluenceDataset drop_light_bit(const aip::InfluenceDataset& d) {
  aip::InfluenceDataset out;
  out.provenance = d.provenance;
  out.provenance.env_id = "traffic";
  out.provenance.dset_width = d.provenance.dset_width - 1;
  out.samples.reserve(d.samples.size());
  for (const auto& s : d.samples) {
    aip::InfluenceSample c{{}, s.target, s.episode, s.t};
    c.window.reserve(s.window.size());
    for (const auto& r : s.window) {
      DSetRow row(r.size() - 1);
      for (std::size_t i = 0; i + 1 < r.size(); ++i) row[i] = r[i];
      c.window.push_back(std::move(row));
    }
    out.samples.push_back(std::move(c));
  }
  return out;
}

/// Feedforward network over rows one bit wider than `plain`'s, with the same
/// function: every weight is copied and the extra input column starts at zero.
inline aip::InfluenceNet widen_with_zero_column(const aip::InfluenceNet& plain) {
  if (plain.config().arch != aip::Arch::ff) throw ConfigError("probe: only feedforward predictors are supported");
  aip::InfluenceNet wide(plain.config(), plain.width() + 1, plain.classes());
  const int w = plain.width(), k = plain.config().k;
  auto& dst = wide.trunk().layers();
  const auto& src = plain.trunk().layers();
  for (std::size_t l = 0; l < src.size(); ++l) {
    dst[l].bias.value = src[l].bias.value;
    if (l > 0) {
      dst[l].weight.value = src[l].weight.value;
      continue;
    }
    dst[0].weight.value.setZero();
    for (int r = 0; r < k; ++r) {
      dst[0].weight.value.middleCols(r * (w + 1), w) = src[0].weight.value.middleCols(r * w, w);
    }
  }
  for (std::size_t m = 0; m < plain.heads().heads().size(); ++m) {
    wide.heads().heads()[m].weight.value = plain.heads().heads()[m].weight.value;
    wide.heads().heads()[m].bias.value = plain.heads().heads()[m].bias.value;
  }
  return wide;
}

enum class ShiftedPolicy { always_ns, queue, uniform };

inline std::string to_string(ShiftedPolicy p) {
  switch (p) {
    case ShiftedPolicy::always_ns: return "always-ns";
    case ShiftedPolicy::queue: return "queue";
    case ShiftedPolicy::uniform: return "uniform-random";
  }
  return "?";
}

inline ShiftedPolicy shifted_policy_from_string(const std::string& s) {
  if (s == "always-ns") return ShiftedPolicy::always_ns;
  if (s == "queue") return ShiftedPolicy::queue;
  if (s == "uniform-random") return ShiftedPolicy::uniform;
  throw ConfigError("unknown shifted policy '" + s + "'");
}

struct ProbeConfig {
  TrafficConfig env;
  long n_train = 50000;
  long n_eval = 20000;
  aip::NetConfig net = [] {
    aip::NetConfig c;
    c.arch = aip::Arch::ff;
    c.k = 4;
    c.ff_hidden = {64, 64};
    return c;
  }();
  aip::TrainConfig train = [] {
    aip::TrainConfig c;
    c.max_epochs = 30;
    c.lr = 1e-3;
    return c;
  }();
  ShiftedPolicy shifted = ShiftedPolicy::always_ns;
  std::uint64_t seed = 0;
};

struct ProbeArm {
  double ce_train_policy = 0.0;
  double ce_shifted_policy = 0.0;
  double degradation() const { return ce_shifted_policy - ce_train_policy; }
};

struct ProbeReport {
  ProbeArm dset;        // occupancy only
  ProbeArm confounded;  // occupancy plus the local light
  std::string shifted_policy;
  std::uint64_t seed = 0;

  bool confounded_degrades_more() const { return confounded.degradation() >= dset.degradation(); }

  aip::json to_json() const {
    auto arm = [](const ProbeArm& a) {
      return aip::json{{"ce_train_policy", a.ce_train_policy},
                       {"ce_shifted_policy", a.ce_shifted_policy},
                       {"degradation", a.degradation()}};
    };
    return {{"dset", arm(dset)},
            {"confounded", arm(confounded)},
            {"shifted_policy", shifted_policy},
            {"seed", seed},
            {"confounded_degrades_more", confounded_degrades_more()}};
  }
};

/// Trains one predictor on occupancy windows and one on occupancy plus light
/// state, both from uniform-random data, then compares how much their
/// cross-entropy worsens when the controlled light follows another policy.
inline ProbeReport spurious_correlation_probe(const ProbeConfig& cfg) {
  TrafficConfig env = cfg.env;
  env.confounded_dset = true;
  env.validate();
  TrafficGlobalSimulator gs(env);
  Rng root(cfg.seed);
  const int k = cfg.net.k;

  UniformRandomPolicy pi0(2);
  const auto train_c = aip::collect_dataset(gs, pi0, cfg.n_train, k, root.split("train").next_u64());
  const auto eval0_c = aip::collect_dataset(gs, pi0, cfg.n_eval, k, root.split("eval-train-policy").next_u64());

  std::unique_ptr<Policy> shifted;
  switch (cfg.shifted) {
    case ShiftedPolicy::always_ns: shifted = std::make_unique<ConstantPolicy>(kPhaseNS); break;
    case ShiftedPolicy::queue: shifted = std::make_unique<QueuePolicy>(env.lane_cells); break;
    case ShiftedPolicy::uniform: shifted = std::make_unique<UniformRandomPolicy>(2); break;
  }
  const auto eval1_c = aip::collect_dataset(gs, *shifted, cfg.n_eval, k, root.split("eval-shifted-policy").next_u64(),
                                            to_string(cfg.shifted));

  // Both predictors start from the same function and see the same batches,
  // so they differ only through the light input.
  const auto train_p = drop_light_bit(train_c);
  aip::InfluenceNet init(cfg.net, train_p.provenance.dset_width, train_p.provenance.influence_classes);
  Rng init_rng = root.split("init");
  init.init(init_rng);
  aip::TrainConfig tc = cfg.train;
  tc.seed = root.split("fit").next_u64();
  const auto conf = aip::fit_predictor(train_c, widen_with_zero_column(init), tc).first;
  const auto plain = aip::fit_predictor(train_p, std::move(init), tc).first;

  ProbeReport r;
  r.seed = cfg.seed;
  r.shifted_policy = to_string(cfg.shifted);
  r.confounded = {aip::evaluate_ce(conf, eval0_c), aip::evaluate_ce(conf, eval1_c)};
  r.dset = {aip::evaluate_ce(plain, drop_light_bit(eval0_c)), aip::evaluate_ce(plain, drop_light_bit(eval1_c))};
  return r;
}

}  // namespace ials::traffic
