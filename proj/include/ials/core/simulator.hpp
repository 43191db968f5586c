#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ials/core/rng.hpp"
#include "ials/core/types.hpp"

namespace ials {

/// Static shape information every simulator publishes.
struct EnvDescriptor {
  std::string env_id;
  int obs_width = 0;
  int num_actions = 0;
  int local_width = 0;
  int dset_width = 0;
  std::vector<int> influence_classes;  // class count per head
  int episode_length = 0;

  int num_heads() const { return static_cast<int>(influence_classes.size()); }

  /// Fingerprint of the fields an influence predictor depends on.
  std::uint64_t predictor_fingerprint() const {
    std::string key = env_id + "|" + std::to_string(dset_width) + "|";
    for (int c : influence_classes) key += std::to_string(c) + ",";
    return derive_seed(0, key);
  }

  bool same_interface(const EnvDescriptor& o) const {
    return obs_width == o.obs_width && num_actions == o.num_actions;
  }
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

/// Anything an agent can be trained or evaluated on. reset(seed) followed by
/// the same action sequence must reproduce the trajectory bit-exactly.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual const EnvDescriptor& descriptor() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(Action a) = 0;
};

/// Simulator of the full system that can also report the local-region view.
class GlobalSimulator : public Simulator {
 public:
  virtual LocalState local_state() const = 0;
  /// Influence-source values that drove the most recent transition.
  virtual InfluenceValue last_influence() const = 0;
  /// D-set row of the current step.
  virtual DSetRow dset_row() const = 0;
};

/// Simulator of the local region only; the caller supplies the influence
/// sources for every transition.
///
/// Implementations draw their randomness from the "local" sub-stream of the
/// reset seed, in the same order as the matching global simulator, so replaying
/// a realized influence sequence reproduces the local trajectory.
class LocalSimulator {
 public:
  virtual ~LocalSimulator() = default;
  virtual const EnvDescriptor& descriptor() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(Action a, const InfluenceValue& u) = 0;
  virtual LocalState local_state() const = 0;
  virtual DSetRow dset_row() const = 0;
};

using SimulatorFactory = std::function<std::unique_ptr<Simulator>()>;
using GlobalSimulatorFactory = std::function<std::unique_ptr<GlobalSimulator>()>;
using LocalSimulatorFactory = std::function<std::unique_ptr<LocalSimulator>()>;

/// Policies are stateful over an episode: begin_episode() then act() once per
/// step with the latest observation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() {}
  virtual Action act(const Observation& obs, Rng& rng) = 0;
};

class UniformRandomPolicy : public Policy {
 public:
  explicit UniformRandomPolicy(int num_actions) : num_actions_(num_actions) {}
  Action act(const Observation&, Rng& rng) override { return Action{rng.uniform_int(num_actions_)}; }

 private:
  int num_actions_;
};

/// Always plays the same action.
class ConstantPolicy : public Policy {
 public:
  explicit ConstantPolicy(int action) : action_(action) {}
  Action act(const Observation&, Rng&) override { return Action{action_}; }

 private:
  int action_;
};

}  // namespace ials
