#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "ials/core/simulator.hpp"
#include "ials/warehouse/geometry.hpp"

namespace ials::warehouse {

inline EnvDescriptor warehouse_descriptor(const WarehouseConfig& cfg) {
  EnvDescriptor e;
  e.env_id = cfg.env_id();
  e.obs_width = kObsWidth;
  e.num_actions = kNumActions;
  e.local_width = kObsWidth;
  e.dset_width = kDSetWidth;
  if (cfg.fixed()) {
    e.influence_classes.assign(kItemsPerRegion, 2);
  } else {
    e.influence_classes.assign(kNeighborHeads, 4);
  }
  e.episode_length = cfg.episode_length;
  return e;
}

/// Item lifetimes in the controlled region, split by how the item left.
struct LifetimeStats {
  std::map<int, long> removed;    // expired or taken by a neighbour
  std::map<int, long> collected;  // picked up by the controlled robot
  long spawned = 0;

  void merge(const LifetimeStats& o) {
    for (const auto& [k, v] : o.removed) removed[k] += v;
    for (const auto& [k, v] : o.collected) collected[k] += v;
    spawned += o.spawned;
  }
};

namespace detail {

/// Bookkeeping shared by both simulators for the 12 local item cells.
struct LocalItemLog {
  std::array<int, kItemsPerRegion> spawn_time{};
  LifetimeStats stats;

  void reset() { spawn_time.fill(-1); }
  void spawn(int item, int now) {
    spawn_time[static_cast<std::size_t>(item)] = now;
    ++stats.spawned;
  }
  void remove(int item, int now, bool by_controlled) {
    auto& st = spawn_time[static_cast<std::size_t>(item)];
    if (st >= 0) ++(by_controlled ? stats.collected : stats.removed)[now - st];
    st = -1;
  }
};

inline Observation make_observation(int robot_cell, const std::array<std::uint8_t, kItemsPerRegion>& active) {
  Observation o(static_cast<std::size_t>(kObsWidth));
  o[static_cast<std::size_t>(robot_cell)] = 1;
  for (int i = 0; i < kItemsPerRegion; ++i) o[static_cast<std::size_t>(kRegionCells + i)] = active[static_cast<std::size_t>(i)];
  return o;
}

inline DSetRow make_dset_row(int robot_cell, const std::array<std::uint8_t, kItemsPerRegion>& active) {
  DSetRow d(static_cast<std::size_t>(kDSetWidth));
  for (int i = 0; i < kItemsPerRegion; ++i) d[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i)];
  const int item = kItemAtCell[static_cast<std::size_t>(robot_cell)];
  if (item >= 0) d[static_cast<std::size_t>(kItemsPerRegion + item)] = 1;
  return d;
}

}  // namespace detail

/// All 36 robots and 252 shelf cells. The controlled robot follows the agent's
/// actions; every other robot heads for the oldest item in its region.
class WarehouseGlobalSimulator : public GlobalSimulator {
 public:
  explicit WarehouseGlobalSimulator(WarehouseConfig cfg)
      : cfg_(cfg), geo_(std::make_shared<const Geometry>(cfg)), desc_(warehouse_descriptor(cfg)) {
    ctrl_ = geo_->region(cfg_.controlled_row, cfg_.controlled_col);
    local_of_shelf_.assign(static_cast<std::size_t>(geo_->num_shelves()), -1);
    for (int i = 0; i < kItemsPerRegion; ++i) {
      local_of_shelf_[static_cast<std::size_t>(geo_->region_items[static_cast<std::size_t>(ctrl_)][static_cast<std::size_t>(i)])] = i;
    }
    for (int h = 0; h < kNeighborHeads; ++h) neighbor_[static_cast<std::size_t>(h)] = geo_->neighbor(cfg_.controlled_row, cfg_.controlled_col, h);
  }

  const EnvDescriptor& descriptor() const override { return desc_; }
  const WarehouseConfig& config() const { return cfg_; }
  const Geometry& geometry() const { return *geo_; }

  Observation reset(std::uint64_t seed) override {
    Rng root(seed);
    local_rng_ = root.split("local");
    global_rng_ = root.split("global");
    age_.assign(static_cast<std::size_t>(geo_->num_shelves()), -1);
    robot_.resize(static_cast<std::size_t>(geo_->num_regions()));
    for (int R = 0; R < geo_->robots; ++R) {
      for (int C = 0; C < geo_->robots; ++C) robot_[static_cast<std::size_t>(geo_->region(R, C))] = {4 * R + 2, 4 * C + 2};
    }
    t_ = 0;
    started_ = true;
    log_.reset();
    last_influence_ = InfluenceValue();
    return observation();
  }

  StepResult step(Action a) override {
    if (!started_) throw StateError("warehouse: step before reset");
    if (t_ >= cfg_.episode_length) throw StateError("warehouse: step after episode end");
    if (a.index < 0 || a.index >= kNumActions) throw ShapeError("warehouse: action out of range");
    const int now = t_ + 1;
    const auto& local_items = geo_->region_items[static_cast<std::size_t>(ctrl_)];

    std::vector<int> classes;
    if (cfg_.fixed()) {
      classes.resize(kItemsPerRegion);
      for (int i = 0; i < kItemsPerRegion; ++i) {
        classes[static_cast<std::size_t>(i)] = age_[static_cast<std::size_t>(local_items[static_cast<std::size_t>(i)])] == cfg_.lifetime - 1;
      }
    }

    // (1) controlled robot, (2) scripted robots
    move_robot(ctrl_, a.index);
    for (int g = 0; g < geo_->num_regions(); ++g) {
      if (g != ctrl_) move_scripted(g);
    }
    if (!cfg_.fixed()) {
      classes.assign(kNeighborHeads, kElsewhere);
      for (int h = 0; h < kNeighborHeads; ++h) classes[static_cast<std::size_t>(h)] = neighbor_class(h);
    }
    last_influence_ = InfluenceValue(std::move(classes));

    // (3) collection; ties go to the controlled robot
    double reward = 0.0;
    {
      const int sid = shelf_under(ctrl_);
      if (sid >= 0 && age_[static_cast<std::size_t>(sid)] >= 0) {
        reward += cfg_.item_reward;
        deactivate(sid, now, true);
      }
    }
    if (!cfg_.fixed()) {
      for (int g = 0; g < geo_->num_regions(); ++g) {
        if (g == ctrl_) continue;
        const int sid = shelf_under(g);
        if (sid >= 0 && age_[static_cast<std::size_t>(sid)] >= 0) deactivate(sid, now, false);
      }
    }

    // (4) ageing and expiry
    for (std::size_t sid = 0; sid < age_.size(); ++sid) {
      if (age_[sid] < 0) continue;
      ++age_[sid];
      if (cfg_.fixed() && age_[sid] >= cfg_.lifetime) deactivate(static_cast<int>(sid), now, false);
    }

    // (5) spawning on cells that were empty when the step began; the local
    // cells draw from the local stream in local item order, exactly as the
    // local simulator does
    for (std::size_t sid = 0; sid < age_.size(); ++sid) {
      if (local_of_shelf_[sid] >= 0) continue;
      const double draw = global_rng_.uniform();
      if (age_[sid] == kEmpty && draw < cfg_.spawn_prob) age_[sid] = 0;
    }
    for (int i = 0; i < kItemsPerRegion; ++i) {
      const auto sid = static_cast<std::size_t>(local_items[static_cast<std::size_t>(i)]);
      const double draw = local_rng_.uniform();
      if (age_[sid] == kEmpty && draw < cfg_.spawn_prob) {
        age_[sid] = 0;
        log_.spawn(i, now);
      }
    }
    for (auto& age : age_) {
      if (age == kCleared) age = kEmpty;
    }

    t_ = now;
    return {observation(), reward, t_ >= cfg_.episode_length};
  }

  LocalState local_state() const override { return LocalState(observation().bits); }
  InfluenceValue last_influence() const override {
    if (last_influence_.size() == 0) throw StateError("warehouse: no transition yet");
    return last_influence_;
  }
  DSetRow dset_row() const override { return detail::make_dset_row(robot_local_cell(), local_active()); }

  int t() const { return t_; }
  const LifetimeStats& lifetimes() const { return log_.stats; }
  void clear_lifetimes() { log_.stats = {}; }

  // state access for tests and instrumentation
  std::array<int, 2> robot(int region) const { return robot_[static_cast<std::size_t>(region)]; }
  int controlled_region() const { return ctrl_; }
  int item_age(int shelf) const { return age_[static_cast<std::size_t>(shelf)]; }
  int local_item_age(int item) const {
    return age_[static_cast<std::size_t>(geo_->region_items[static_cast<std::size_t>(ctrl_)][static_cast<std::size_t>(item)])];
  }
  void set_item(int shelf, int age) { age_[static_cast<std::size_t>(shelf)] = static_cast<std::int16_t>(age); }
  void set_robot(int region, int r, int c) { robot_[static_cast<std::size_t>(region)] = {r, c}; }

 private:
  void move_robot(int g, int action) {
    auto& p = robot_[static_cast<std::size_t>(g)];
    const int R = g / geo_->robots, C = g % geo_->robots;
    const int r = p[0] + kActionDr[static_cast<std::size_t>(action)];
    const int c = p[1] + kActionDc[static_cast<std::size_t>(action)];
    if (r >= 4 * R && r <= 4 * R + 4 && c >= 4 * C && c <= 4 * C + 4) p = {r, c};
  }

  void move_scripted(int g) {
    const auto& items = geo_->region_items[static_cast<std::size_t>(g)];
    int best = -1, best_age = -1;
    for (int i = 0; i < kItemsPerRegion; ++i) {
      const int age = age_[static_cast<std::size_t>(items[static_cast<std::size_t>(i)])];
      if (age > best_age) {
        best_age = age;
        best = i;
      }
    }
    if (best < 0) return;
    const auto& target = geo_->shelf_cell[static_cast<std::size_t>(items[static_cast<std::size_t>(best)])];
    auto& p = robot_[static_cast<std::size_t>(g)];
    if (p[1] != target[1]) {
      p[1] += p[1] < target[1] ? 1 : -1;
    } else if (p[0] != target[0]) {
      p[0] += p[0] < target[0] ? 1 : -1;
    }
  }

  int shelf_under(int g) const {
    const auto& p = robot_[static_cast<std::size_t>(g)];
    return geo_->shelf_at[static_cast<std::size_t>(p[0] * geo_->grid + p[1])];
  }

  int neighbor_class(int h) const {
    const int nb = neighbor_[static_cast<std::size_t>(h)];
    if (nb < 0) return kElsewhere;
    const int sid = shelf_under(nb);
    if (sid < 0) return kElsewhere;
    const int li = local_of_shelf_[static_cast<std::size_t>(sid)];
    if (li < 0 || li / 3 != h) return kElsewhere;
    return li % 3;
  }

  void deactivate(int sid, int now, bool by_controlled) {
    age_[static_cast<std::size_t>(sid)] = kCleared;
    const int li = local_of_shelf_[static_cast<std::size_t>(sid)];
    if (li >= 0) log_.remove(li, now, by_controlled);
  }

  int robot_local_cell() const {
    const auto& p = robot_[static_cast<std::size_t>(ctrl_)];
    return local_cell(p[0] - 4 * cfg_.controlled_row, p[1] - 4 * cfg_.controlled_col);
  }

  std::array<std::uint8_t, kItemsPerRegion> local_active() const {
    std::array<std::uint8_t, kItemsPerRegion> act{};
    const auto& items = geo_->region_items[static_cast<std::size_t>(ctrl_)];
    for (int i = 0; i < kItemsPerRegion; ++i) act[static_cast<std::size_t>(i)] = age_[static_cast<std::size_t>(items[static_cast<std::size_t>(i)])] >= 0;
    return act;
  }

  Observation observation() const { return detail::make_observation(robot_local_cell(), local_active()); }

  static constexpr std::int16_t kEmpty = -1;
  static constexpr std::int16_t kCleared = -2;  // emptied during the current step

  WarehouseConfig cfg_;
  std::shared_ptr<const Geometry> geo_;
  EnvDescriptor desc_;
  int ctrl_ = 0;
  std::array<int, kNeighborHeads> neighbor_{};
  std::vector<int> local_of_shelf_;
  std::vector<std::int16_t> age_;
  std::vector<std::array<int, 2>> robot_;
  Rng local_rng_, global_rng_;
  int t_ = 0;
  bool started_ = false;
  InfluenceValue last_influence_;
  detail::LocalItemLog log_;
};

/// The controlled region alone. Neighbour robots (or, in fixed-lifetime mode,
/// item expiry) act only through the injected influence.
class WarehouseLocalSimulator : public LocalSimulator {
 public:
  explicit WarehouseLocalSimulator(WarehouseConfig cfg) : cfg_(cfg), desc_(warehouse_descriptor(cfg)) { cfg_.validate(); }

  const EnvDescriptor& descriptor() const override { return desc_; }
  const WarehouseConfig& config() const { return cfg_; }

  Observation reset(std::uint64_t seed) override {
    local_rng_ = Rng(seed).split("local");
    active_.fill(0);
    r_ = 2;
    c_ = 2;
    t_ = 0;
    started_ = true;
    log_.reset();
    return detail::make_observation(local_cell(r_, c_), active_);
  }

  StepResult step(Action a, const InfluenceValue& u) override {
    if (!started_) throw StateError("warehouse local: step before reset");
    if (t_ >= cfg_.episode_length) throw StateError("warehouse local: step after episode end");
    if (a.index < 0 || a.index >= kNumActions) throw ShapeError("warehouse local: action out of range");
    validate_influence(u, desc_.influence_classes);
    const int now = t_ + 1;

    const int r = r_ + kActionDr[static_cast<std::size_t>(a.index)];
    const int c = c_ + kActionDc[static_cast<std::size_t>(a.index)];
    if (r >= 0 && r <= 4 && c >= 0 && c <= 4) {
      r_ = r;
      c_ = c;
    }

    const auto was_active = active_;
    double reward = 0.0;
    const int here = kItemAtCell[static_cast<std::size_t>(local_cell(r_, c_))];
    if (here >= 0 && active_[static_cast<std::size_t>(here)]) {
      reward += cfg_.item_reward;
      active_[static_cast<std::size_t>(here)] = 0;
      log_.remove(here, now, true);
    }

    if (cfg_.fixed()) {
      for (int i = 0; i < kItemsPerRegion; ++i) {
        if (u[static_cast<std::size_t>(i)] == 1) remove(i, now);
      }
    } else {
      for (int h = 0; h < kNeighborHeads; ++h) {
        const int cls = u[static_cast<std::size_t>(h)];
        if (cls != kElsewhere) remove(3 * h + cls, now);
      }
    }

    for (int i = 0; i < kItemsPerRegion; ++i) {
      const double draw = local_rng_.uniform();
      if (!was_active[static_cast<std::size_t>(i)] && draw < cfg_.spawn_prob) {
        active_[static_cast<std::size_t>(i)] = 1;
        log_.spawn(i, now);
      }
    }

    t_ = now;
    return {detail::make_observation(local_cell(r_, c_), active_), reward, t_ >= cfg_.episode_length};
  }

  LocalState local_state() const override { return LocalState(detail::make_observation(local_cell(r_, c_), active_).bits); }
  DSetRow dset_row() const override { return detail::make_dset_row(local_cell(r_, c_), active_); }

  int t() const { return t_; }
  const LifetimeStats& lifetimes() const { return log_.stats; }
  void clear_lifetimes() { log_.stats = {}; }
  bool item_active(int item) const { return active_[static_cast<std::size_t>(item)] != 0; }
  void set_item_active(int item, bool on) {
    active_[static_cast<std::size_t>(item)] = on;
    if (on) log_.spawn(item, t_);
  }
  void set_robot(int r, int c) {
    r_ = r;
    c_ = c;
  }

 private:
  void remove(int item, int now) {
    if (!active_[static_cast<std::size_t>(item)]) return;
    active_[static_cast<std::size_t>(item)] = 0;
    log_.remove(item, now, false);
  }

  WarehouseConfig cfg_;
  EnvDescriptor desc_;
  Rng local_rng_;
  std::array<std::uint8_t, kItemsPerRegion> active_{};
  int r_ = 2, c_ = 2;
  int t_ = 0;
  bool started_ = false;
  detail::LocalItemLog log_;
};

}  // namespace ials::warehouse
