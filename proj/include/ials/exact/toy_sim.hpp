#pragma once

#include <memory>

#include "ials/core/simulator.hpp"
#include "ials/exact/toy_dbn.hpp"

namespace ials::exact {

inline EnvDescriptor toy_descriptor(const ToyDbn& d) {
  EnvDescriptor e;
  e.env_id = "toy-" + d.name;
  e.obs_width = d.local_width();
  e.num_actions = d.num_actions;
  e.local_width = d.local_width();
  e.dset_width = d.dset_width();
  e.influence_classes = {2};
  e.episode_length = d.episode_length;
  return e;
}

/// Samples the DBN forward. Local cells draw from the "local" stream, all
/// other cells from the "global" stream.
class ToyGlobalSimulator : public GlobalSimulator {
 public:
  explicit ToyGlobalSimulator(std::shared_ptr<const ToyDbn> dbn) : dbn_(std::move(dbn)), desc_(toy_descriptor(*dbn_)) {}

  const EnvDescriptor& descriptor() const override { return desc_; }

  Observation reset(std::uint64_t seed) override {
    Rng root(seed);
    local_rng_ = root.split("local");
    global_rng_ = root.split("global");
    const auto& d = *dbn_;
    s_ = 0;
    for (int c : d.local_cells) s_ |= static_cast<int>(local_rng_.bernoulli(d.prior_one[static_cast<std::size_t>(c)])) << c;
    for (int c = 0; c < d.num_cells; ++c) {
      if (!d.is_local(c)) s_ |= static_cast<int>(global_rng_.bernoulli(d.prior_one[static_cast<std::size_t>(c)])) << c;
    }
    t_ = 0;
    prev_action_ = -1;
    last_u_ = -1;
    started_ = true;
    return observation();
  }

  StepResult step(Action a) override {
    if (!started_) throw StateError("toy simulator: step before reset");
    if (t_ >= dbn_->episode_length) throw StateError("toy simulator: step after episode end");
    const auto& d = *dbn_;
    if (a.index < 0 || a.index >= d.num_actions) throw ShapeError("toy simulator: action out of range");
    const double r = d.reward_of(d.local_index(s_), a.index);
    last_u_ = d.u_value(s_);
    int next = 0;
    for (int c : d.local_cells) next |= static_cast<int>(local_rng_.bernoulli(d.cell_p_one(c, s_, a.index))) << c;
    for (int c = 0; c < d.num_cells; ++c) {
      if (!d.is_local(c)) next |= static_cast<int>(global_rng_.bernoulli(d.cell_p_one(c, s_, a.index))) << c;
    }
    s_ = next;
    prev_action_ = a.index;
    ++t_;
    return {observation(), r, t_ >= d.episode_length};
  }

  LocalState local_state() const override { return LocalState(dbn_->local_bits(dbn_->local_index(s_))); }
  InfluenceValue last_influence() const override {
    if (last_u_ < 0) throw StateError("toy simulator: no transition yet");
    return InfluenceValue({last_u_});
  }
  DSetRow dset_row() const override { return DSetRow(dbn_->dset_bits(dbn_->local_index(s_), prev_action_)); }

  int state() const { return s_; }
  int t() const { return t_; }
  /// Overwrites the joint state; randomness streams are left untouched.
  void inject_state(int s) { s_ = s; }
  const ToyDbn& dbn() const { return *dbn_; }

 private:
  Observation observation() const { return Observation(dbn_->local_bits(dbn_->local_index(s_))); }

  std::shared_ptr<const ToyDbn> dbn_;
  EnvDescriptor desc_;
  Rng local_rng_, global_rng_;
  int s_ = 0;
  int t_ = 0;
  int prev_action_ = -1;
  int last_u_ = -1;
  bool started_ = false;
};

/// Local cells only; u is supplied per step.
class ToyLocalSimulator : public LocalSimulator {
 public:
  explicit ToyLocalSimulator(std::shared_ptr<const ToyDbn> dbn) : dbn_(std::move(dbn)), desc_(toy_descriptor(*dbn_)) {}

  const EnvDescriptor& descriptor() const override { return desc_; }

  Observation reset(std::uint64_t seed) override {
    local_rng_ = Rng(seed).split("local");
    const auto& d = *dbn_;
    x_ = 0;
    for (std::size_t j = 0; j < d.local_cells.size(); ++j) {
      x_ |= static_cast<int>(local_rng_.bernoulli(d.prior_one[static_cast<std::size_t>(d.local_cells[j])])) << j;
    }
    t_ = 0;
    prev_action_ = -1;
    started_ = true;
    return observation();
  }

  StepResult step(Action a, const InfluenceValue& u) override {
    if (!started_) throw StateError("toy local simulator: step before reset");
    if (t_ >= dbn_->episode_length) throw StateError("toy local simulator: step after episode end");
    validate_influence(u, desc_.influence_classes);
    const auto& d = *dbn_;
    if (a.index < 0 || a.index >= d.num_actions) throw ShapeError("toy local simulator: action out of range");
    const double r = d.reward_of(x_, a.index);
    int s = u[0] << d.u_cell;
    for (std::size_t j = 0; j < d.local_cells.size(); ++j) s |= ((x_ >> j) & 1) << d.local_cells[j];
    int next = 0;
    for (std::size_t j = 0; j < d.local_cells.size(); ++j) {
      next |= static_cast<int>(local_rng_.bernoulli(d.cell_p_one(d.local_cells[j], s, a.index))) << j;
    }
    x_ = next;
    prev_action_ = a.index;
    ++t_;
    return {observation(), r, t_ >= d.episode_length};
  }

  LocalState local_state() const override { return LocalState(dbn_->local_bits(x_)); }
  DSetRow dset_row() const override { return DSetRow(dbn_->dset_bits(x_, prev_action_)); }

  int local_index() const { return x_; }

 private:
  Observation observation() const { return Observation(dbn_->local_bits(x_)); }

  std::shared_ptr<const ToyDbn> dbn_;
  EnvDescriptor desc_;
  Rng local_rng_;
  int x_ = 0;
  int t_ = 0;
  int prev_action_ = -1;
  bool started_ = false;
};

}  // namespace ials::exact
