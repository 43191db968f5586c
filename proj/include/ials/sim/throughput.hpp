#pragma once

#include <chrono>
#include <cstdint>

#include <json.hpp>

#include "ials/core/simulator.hpp"

namespace ials {

struct ThroughputReport {
  long steps = 0;
  double seconds = 0.0;
  double steps_per_second() const { return seconds > 0.0 ? static_cast<double>(steps) / seconds : 0.0; }
};

/// Times `steps` uniform-random steps after `warmup` untimed ones, resetting
/// at episode ends.
inline ThroughputReport throughput_bench(Simulator& sim, long steps, std::uint64_t seed = 0, long warmup = 1000) {
  if (steps < 1) throw ConfigError("throughput_bench: steps must be >= 1");
  const Rng root(seed);
  Rng rng = root.split("bench");
  const int na = sim.descriptor().num_actions;
  std::uint64_t episode = 0;
  sim.reset(root.split("episode", episode++).next_u64());
  auto run = [&](long n) {
    for (long i = 0; i < n; ++i) {
      if (sim.step(Action{rng.uniform_int(na)}).done) sim.reset(root.split("episode", episode++).next_u64());
    }
  };
  run(warmup);
  const auto t0 = std::chrono::steady_clock::now();
  run(steps);
  ThroughputReport r;
  r.steps = steps;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct ThroughputComparison {
  ThroughputReport gs;
  ThroughputReport ials;
  /// IALS steps per second over GS steps per second.
  double ratio() const {
    const double g = gs.steps_per_second();
    return g > 0.0 ? ials.steps_per_second() / g : 0.0;
  }

  nlohmann::json to_json() const {
    return {{"gs_steps_per_second", gs.steps_per_second()},
            {"ials_steps_per_second", ials.steps_per_second()},
            {"steps", gs.steps},
            {"ratio", ratio()}};
  }
};

/// Alternates the two benches for `rounds` rounds and keeps each side's
/// fastest run, so a stall from another process hits neither side alone.
inline ThroughputComparison compare_throughput(Simulator& gs, Simulator& ials, long steps, std::uint64_t seed = 0,
                                               int rounds = 5) {
  if (rounds < 1) throw ConfigError("compare_throughput: rounds must be >= 1");
  ThroughputComparison c;
  for (int r = 0; r < rounds; ++r) {
    const auto g = throughput_bench(gs, steps, seed);
    const auto i = throughput_bench(ials, steps, seed);
    if (r == 0 || g.seconds < c.gs.seconds) c.gs = g;
    if (r == 0 || i.seconds < c.ials.seconds) c.ials = i;
  }
  return c;
}

}  // namespace ials
