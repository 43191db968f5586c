#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ials/rl/ppo.hpp"

namespace ials::rl {

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  LearningCurve curve;
  std::optional<PolicyNet> policy;
  double train_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;
  AggregateCurve aggregate;

  std::vector<LearningCurve> curves() const {
    std::vector<LearningCurve> c;
    for (const auto& r : runs) {
      if (r.ok) c.push_back(r.curve);
    }
    return c;
  }
  bool all_ok() const {
    for (const auto& r : runs) {
      if (!r.ok) return false;
    }
    return !runs.empty();
  }
};

/// Trains one policy per seed on a fresh simulator from `make_train`, with
/// evaluation on a fresh simulator from `make_eval`. A failing seed is
/// recorded and the others still run. With `out_dir`, writes
/// curve_seed<s>.csv per seed and aggregate.csv.
inline ExperimentResult run_experiment(const SimulatorFactory& make_train, const SimulatorFactory& make_eval,
                                       const PpoConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                       const RunInfo& info = {}, const std::string& out_dir = "") {
  if (seeds.empty()) throw ConfigError("run_experiment: no seeds");
  ExperimentResult res;
  for (auto seed : seeds) {
    SeedRun run;
    run.seed = seed;
    try {
      auto sim = make_train();
      auto eval = make_eval();
      auto o = train_policy(*sim, *eval, cfg, seed, info);
      run.curve = std::move(o.curve);
      run.train_seconds = o.train_seconds;
      run.policy.emplace(std::move(o.policy));
      run.ok = true;
    } catch (const Error& e) {
      run.error = e.what();
    }
    res.runs.push_back(std::move(run));
  }
  res.aggregate = AggregateCurve::of(res.curves());
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const auto& r : res.runs) {
      if (r.ok) r.curve.write_csv(out_dir + "/curve_seed" + std::to_string(r.seed) + ".csv");
    }
    res.aggregate.write_csv(out_dir + "/aggregate.csv");
  }
  return res;
}

}  // namespace ials::rl
