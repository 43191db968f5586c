#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/core/simulator.hpp"

namespace ials::traffic {

// Directions: 0 north, 1 east, 2 south, 3 west. Lane d of an intersection
// carries cars arriving from side d, i.e. heading (d + 2) % 4.
inline constexpr int kLanesPerIntersection = 4;
inline constexpr int kPhaseNS = 0;
inline constexpr int kPhaseEW = 1;

struct TrafficConfig {
  int grid = 5;               // intersections per side
  int lane_cells = 9;
  double spawn_prob = 0.1;    // per boundary lane per step
  int controlled_row = 2;
  int controlled_col = 2;
  int episode_length = 200;
  int min_phase = 3;
  double p_left = 0.25;
  double p_straight = 0.5;
  double p_right = 0.25;
  bool confounded_dset = false;  // append the local light phase to the d-set row

  int controlled() const { return controlled_row * grid + controlled_col; }
  int num_intersections() const { return grid * grid; }
  int local_cells() const { return kLanesPerIntersection * lane_cells; }

  void validate() const {
    if (grid < 1 || grid > 32) throw ConfigError("traffic: grid must be in [1, 32]");
    if (lane_cells < 2) throw ConfigError("traffic: lane_cells must be >= 2");
    if (controlled_row < 0 || controlled_row >= grid || controlled_col < 0 || controlled_col >= grid) {
      throw ConfigError("traffic: controlled intersection outside the grid");
    }
    if (!(spawn_prob >= 0.0 && spawn_prob <= 1.0)) throw ConfigError("traffic: spawn_prob must be in [0, 1]");
    if (episode_length < 1 || min_phase < 1) throw ConfigError("traffic: episode_length and min_phase must be >= 1");
    const double s = p_left + p_straight + p_right;
    if (p_left < 0 || p_straight < 0 || p_right < 0 || std::abs(s - 1.0) > 1e-12) {
      throw ConfigError("traffic: turn probabilities must be non-negative and sum to 1");
    }
  }
};

inline void to_json(nlohmann::json& j, const TrafficConfig& c) {
  j = {{"grid", c.grid},           {"lane_cells", c.lane_cells},         {"spawn_prob", c.spawn_prob},
       {"controlled_row", c.controlled_row}, {"controlled_col", c.controlled_col}, {"episode_length", c.episode_length},
       {"min_phase", c.min_phase}, {"p_left", c.p_left}, {"p_straight", c.p_straight},
       {"p_right", c.p_right},     {"confounded_dset", c.confounded_dset}};
}

inline void from_json(const nlohmann::json& j, TrafficConfig& c) {
  const TrafficConfig d;
  c.grid = j.value("grid", d.grid);
  c.lane_cells = j.value("lane_cells", d.lane_cells);
  c.spawn_prob = j.value("spawn_prob", d.spawn_prob);
  c.controlled_row = j.value("controlled_row", d.controlled_row);
  c.controlled_col = j.value("controlled_col", d.controlled_col);
  c.episode_length = j.value("episode_length", d.episode_length);
  c.min_phase = j.value("min_phase", d.min_phase);
  c.p_left = j.value("p_left", d.p_left);
  c.p_straight = j.value("p_straight", d.p_straight);
  c.p_right = j.value("p_right", d.p_right);
  c.confounded_dset = j.value("confounded_dset", d.confounded_dset);
  c.validate();
}

inline EnvDescriptor traffic_descriptor(const TrafficConfig& c) {
  EnvDescriptor e;
  e.env_id = c.confounded_dset ? "traffic-confounded" : "traffic";
  e.obs_width = c.local_cells() + 1;
  e.num_actions = 2;
  e.local_width = c.local_cells() + 1;
  e.dset_width = c.local_cells() + (c.confounded_dset ? 1 : 0);
  e.influence_classes.assign(kLanesPerIntersection, 2);
  e.episode_length = c.episode_length;
  return e;
}

inline bool is_green(int phase, int lane_dir) { return (lane_dir % 2 == 0) == (phase == kPhaseNS); }

namespace detail {

/// Next light phase and elapsed count. A switch is allowed once the current
/// phase has been held for `min_phase` steps.
inline void update_phase(int& phase, int& elapsed, int desired, int min_phase) {
  if (desired != phase && elapsed >= min_phase) {
    phase = desired;
    elapsed = 1;
  } else if (elapsed < (1 << 20)) {
    ++elapsed;
  }
}

inline Observation make_observation(const std::uint8_t* local_cells, int n_cells, int phase) {
  Observation o(static_cast<std::size_t>(n_cells + 1));
  for (int i = 0; i < n_cells; ++i) o[static_cast<std::size_t>(i)] = local_cells[i];
  o[static_cast<std::size_t>(n_cells)] = static_cast<std::uint8_t>(phase);
  return o;
}

inline DSetRow make_dset_row(const std::uint8_t* local_cells, int n_cells, int phase, bool confounded) {
  DSetRow d(static_cast<std::size_t>(n_cells + (confounded ? 1 : 0)));
  for (int i = 0; i < n_cells; ++i) d[static_cast<std::size_t>(i)] = local_cells[i];
  if (confounded) d[static_cast<std::size_t>(n_cells)] = static_cast<std::uint8_t>(phase);
  return d;
}

}  // namespace detail

/// Car counters for conservation checks: spawned == exited + present.
struct CarCounts {
  long spawned = 0;
  long exited = 0;
};

/// The whole grid. Every lane is a row of cells; a car advances when the
/// next cell was empty at the start of the step. Cars at a green stop line
/// pick a turn and move to cell 0 of the matching lane of the next
/// intersection, or leave the network at the border.
///
/// Cars leaving the controlled intersection never wait for the downstream
/// lane: they join a queue in front of it and enter when its first cell frees.
class TrafficGlobalSimulator : public GlobalSimulator {
 public:
  explicit TrafficGlobalSimulator(TrafficConfig cfg) : cfg_(cfg), desc_(traffic_descriptor(cfg)) {
    cfg_.validate();
    n_ = cfg_.lane_cells;
    const int lanes = cfg_.num_intersections() * kLanesPerIntersection;
    occ_.assign(static_cast<std::size_t>(lanes * n_), 0);
    next_ = occ_;
    claimed_.assign(static_cast<std::size_t>(lanes), 0);
    backlog_.assign(static_cast<std::size_t>(lanes), 0);
    phase_.assign(static_cast<std::size_t>(cfg_.num_intersections()), kPhaseNS);
    elapsed_.assign(phase_.size(), cfg_.min_phase);
  }

  const EnvDescriptor& descriptor() const override { return desc_; }
  const TrafficConfig& config() const { return cfg_; }

  Observation reset(std::uint64_t seed) override {
    Rng root(seed);
    global_rng_ = root.split("global");
    std::fill(occ_.begin(), occ_.end(), 0);
    std::fill(backlog_.begin(), backlog_.end(), 0);
    std::fill(phase_.begin(), phase_.end(), kPhaseNS);
    std::fill(elapsed_.begin(), elapsed_.end(), cfg_.min_phase);
    counts_ = {};
    t_ = 0;
    started_ = true;
    last_influence_ = InfluenceValue();
    return observation();
  }

  StepResult step(Action a) override {
    if (!started_) throw StateError("traffic: step before reset");
    if (t_ >= cfg_.episode_length) throw StateError("traffic: step after episode end");
    if (a.index < 0 || a.index > 1) throw ShapeError("traffic: action out of range");
    const int ctrl = cfg_.controlled();

    for (int j = 0; j < cfg_.num_intersections(); ++j) {
      auto& ph = phase_[static_cast<std::size_t>(j)];
      int desired = a.index;
      if (j != ctrl) {
        const int ns = queue(j, 0) + queue(j, 2), ew = queue(j, 1) + queue(j, 3);
        desired = ph;
        if (ph == kPhaseNS && ew > ns) desired = kPhaseEW;
        if (ph == kPhaseEW && ns > ew) desired = kPhaseNS;
      }
      detail::update_phase(ph, elapsed_[static_cast<std::size_t>(j)], desired, cfg_.min_phase);
    }

    next_ = occ_;
    std::fill(claimed_.begin(), claimed_.end(), 0);
    const int local_base = ctrl * kLanesPerIntersection * n_;
    int local_cars = 0, local_moved = 0;
    for (int i = 0; i < kLanesPerIntersection * n_; ++i) local_cars += occ_[static_cast<std::size_t>(local_base + i)];

    for (int j = 0; j < cfg_.num_intersections(); ++j) {
      for (int d = 0; d < kLanesPerIntersection; ++d) {
        const int base = (j * kLanesPerIntersection + d) * n_;
        int moved = 0;
        if (occ_[static_cast<std::size_t>(base + n_ - 1)] && is_green(phase_[static_cast<std::size_t>(j)], d) && cross(j, d)) {
          next_[static_cast<std::size_t>(base + n_ - 1)] = 0;
          ++moved;
        }
        for (int i = 0; i < n_ - 1; ++i) {
          const auto c = static_cast<std::size_t>(base + i);
          if (occ_[c] && !occ_[c + 1]) {
            next_[c] = 0;
            next_[c + 1] = 1;
            ++moved;
          }
        }
        if (j == ctrl) local_moved += moved;
      }
    }

    for (std::size_t lane = 0; lane < backlog_.size(); ++lane) {
      const auto entry = lane * static_cast<std::size_t>(n_);
      if (backlog_[lane] > 0 && !occ_[entry]) {
        next_[entry] = 1;
        --backlog_[lane];
      }
    }

    for (int j = 0; j < cfg_.num_intersections(); ++j) {
      for (int d = 0; d < kLanesPerIntersection; ++d) {
        if (neighbor(j, d) >= 0) continue;
        const double draw = global_rng_.uniform();
        const auto entry = static_cast<std::size_t>((j * kLanesPerIntersection + d) * n_);
        if (draw < cfg_.spawn_prob && !occ_[entry]) {
          next_[entry] = 1;
          ++counts_.spawned;
        }
      }
    }

    std::vector<int> u(kLanesPerIntersection);
    for (int d = 0; d < kLanesPerIntersection; ++d) {
      const auto entry = static_cast<std::size_t>(local_base + d * n_);
      u[static_cast<std::size_t>(d)] = !occ_[entry] && next_[entry];
    }
    last_influence_ = InfluenceValue(std::move(u));

    occ_.swap(next_);
    ++t_;
    const double reward = local_cars == 0 ? 1.0 : static_cast<double>(local_moved) / local_cars;
    return {observation(), reward, t_ >= cfg_.episode_length};
  }

  LocalState local_state() const override { return LocalState(observation().bits); }
  InfluenceValue last_influence() const override {
    if (last_influence_.size() == 0) throw StateError("traffic: no transition yet");
    return last_influence_;
  }
  DSetRow dset_row() const override {
    return detail::make_dset_row(local_cells(), cfg_.local_cells(), phase_[static_cast<std::size_t>(cfg_.controlled())],
                                 cfg_.confounded_dset);
  }

  int t() const { return t_; }
  const CarCounts& counts() const { return counts_; }
  long cars_present() const {
    long n = 0;
    for (auto c : occ_) n += c;
    for (auto b : backlog_) n += b;
    return n;
  }

  /// Intersection in direction h (0 N, 1 E, 2 S, 3 W), -1 at the border.
  int neighbor(int j, int h) const {
    static constexpr int dr[4] = {-1, 0, 1, 0};
    static constexpr int dc[4] = {0, 1, 0, -1};
    const int r = j / cfg_.grid + dr[h], c = j % cfg_.grid + dc[h];
    if (r < 0 || r >= cfg_.grid || c < 0 || c >= cfg_.grid) return -1;
    return r * cfg_.grid + c;
  }

  // state access for tests
  bool car(int j, int d, int cell) const { return occ_[index(j, d, cell)] != 0; }
  void set_car(int j, int d, int cell, bool on) { occ_[index(j, d, cell)] = on; }
  int phase(int j) const { return phase_[static_cast<std::size_t>(j)]; }
  void set_phase(int j, int phase, int elapsed) {
    phase_[static_cast<std::size_t>(j)] = phase;
    elapsed_[static_cast<std::size_t>(j)] = elapsed;
  }

 private:
  std::size_t index(int j, int d, int cell) const {
    return static_cast<std::size_t>((j * kLanesPerIntersection + d) * n_ + cell);
  }

  int queue(int j, int d) const {
    int q = 0;
    for (int i = 0; i < n_; ++i) q += occ_[index(j, d, i)];
    return q;
  }

  // Stop-line car of lane (j, d) tries to cross; true if it left the lane.
  bool cross(int j, int d) {
    const int heading = (d + 2) % 4;
    const double draw = global_rng_.uniform();
    int out = heading;
    if (draw < cfg_.p_left) {
      out = (heading + 3) % 4;
    } else if (draw >= cfg_.p_left + cfg_.p_straight) {
      out = (heading + 1) % 4;
    }
    const int k = neighbor(j, out);
    if (k < 0) {
      ++counts_.exited;
      return true;
    }
    const int lane = k * kLanesPerIntersection + (out + 2) % 4;
    if (j == cfg_.controlled()) {
      ++backlog_[static_cast<std::size_t>(lane)];
      return true;
    }
    const auto entry = static_cast<std::size_t>(lane * n_);
    if (occ_[entry] || claimed_[static_cast<std::size_t>(lane)]) return false;
    claimed_[static_cast<std::size_t>(lane)] = 1;
    next_[entry] = 1;
    return true;
  }

  const std::uint8_t* local_cells() const {
    return occ_.data() + static_cast<std::size_t>(cfg_.controlled() * kLanesPerIntersection * n_);
  }
  Observation observation() const {
    return detail::make_observation(local_cells(), cfg_.local_cells(), phase_[static_cast<std::size_t>(cfg_.controlled())]);
  }

  TrafficConfig cfg_;
  EnvDescriptor desc_;
  int n_ = 0;
  std::vector<std::uint8_t> occ_, next_, claimed_;
  std::vector<int> backlog_;
  std::vector<int> phase_, elapsed_;
  Rng global_rng_;
  CarCounts counts_;
  int t_ = 0;
  bool started_ = false;
  InfluenceValue last_influence_;
};

/// The four incoming lanes of the controlled intersection. New cars arrive
/// only through the injected influence; a car injected into an occupied entry
/// cell is dropped.
class TrafficLocalSimulator : public LocalSimulator {
 public:
  explicit TrafficLocalSimulator(TrafficConfig cfg) : cfg_(cfg), desc_(traffic_descriptor(cfg)) {
    cfg_.validate();
    n_ = cfg_.lane_cells;
    occ_.assign(static_cast<std::size_t>(cfg_.local_cells()), 0);
    next_ = occ_;
  }

  const EnvDescriptor& descriptor() const override { return desc_; }
  const TrafficConfig& config() const { return cfg_; }

  // The local dynamics are deterministic given the influence, so the seed
  // is not used.
  Observation reset(std::uint64_t) override {
    std::fill(occ_.begin(), occ_.end(), 0);
    phase_ = kPhaseNS;
    elapsed_ = cfg_.min_phase;
    counts_ = {};
    t_ = 0;
    started_ = true;
    return detail::make_observation(occ_.data(), cfg_.local_cells(), phase_);
  }

  StepResult step(Action a, const InfluenceValue& u) override {
    if (!started_) throw StateError("traffic local: step before reset");
    if (t_ >= cfg_.episode_length) throw StateError("traffic local: step after episode end");
    if (a.index < 0 || a.index > 1) throw ShapeError("traffic local: action out of range");
    validate_influence(u, desc_.influence_classes);
    detail::update_phase(phase_, elapsed_, a.index, cfg_.min_phase);

    next_ = occ_;
    int cars = 0, moved = 0;
    for (auto c : occ_) cars += c;
    for (int d = 0; d < kLanesPerIntersection; ++d) {
      const int base = d * n_;
      if (occ_[static_cast<std::size_t>(base + n_ - 1)] && is_green(phase_, d)) {
        next_[static_cast<std::size_t>(base + n_ - 1)] = 0;
        ++counts_.exited;
        ++moved;
      }
      for (int i = 0; i < n_ - 1; ++i) {
        const auto c = static_cast<std::size_t>(base + i);
        if (occ_[c] && !occ_[c + 1]) {
          next_[c] = 0;
          next_[c + 1] = 1;
          ++moved;
        }
      }
      const auto entry = static_cast<std::size_t>(base);
      if (u[static_cast<std::size_t>(d)] == 1 && !occ_[entry]) {
        next_[entry] = 1;
        ++counts_.spawned;
      }
    }
    occ_.swap(next_);
    ++t_;
    const double reward = cars == 0 ? 1.0 : static_cast<double>(moved) / cars;
    return {detail::make_observation(occ_.data(), cfg_.local_cells(), phase_), reward, t_ >= cfg_.episode_length};
  }

  LocalState local_state() const override {
    return LocalState(detail::make_observation(occ_.data(), cfg_.local_cells(), phase_).bits);
  }
  DSetRow dset_row() const override {
    return detail::make_dset_row(occ_.data(), cfg_.local_cells(), phase_, cfg_.confounded_dset);
  }

  int t() const { return t_; }
  const CarCounts& counts() const { return counts_; }
  long cars_present() const {
    long n = 0;
    for (auto c : occ_) n += c;
    return n;
  }
  bool car(int d, int cell) const { return occ_[static_cast<std::size_t>(d * n_ + cell)] != 0; }
  void set_car(int d, int cell, bool on) { occ_[static_cast<std::size_t>(d * n_ + cell)] = on; }
  int phase() const { return phase_; }
  void set_phase(int phase, int elapsed) {
    phase_ = phase;
    elapsed_ = elapsed;
  }

 private:
  TrafficConfig cfg_;
  EnvDescriptor desc_;
  int n_ = 0;
  std::vector<std::uint8_t> occ_, next_;
  int phase_ = kPhaseNS, elapsed_ = 0;
  CarCounts counts_;
  int t_ = 0;
  bool started_ = false;
};

/// Switches the controlled light toward the approach with more cars.
class QueuePolicy : public Policy {
 public:
  explicit QueuePolicy(int lane_cells = 9) : n_(lane_cells) {}
  Action act(const Observation& obs, Rng&) override {
    int ns = 0, ew = 0;
    for (int d = 0; d < kLanesPerIntersection; ++d) {
      for (int i = 0; i < n_; ++i) (d % 2 == 0 ? ns : ew) += obs[static_cast<std::size_t>(d * n_ + i)];
    }
    const int phase = obs[static_cast<std::size_t>(kLanesPerIntersection * n_)];
    if (ns == ew) return Action{phase};
    return Action{ns > ew ? kPhaseNS : kPhaseEW};
  }

 private:
  int n_;
};

}  // namespace ials::traffic
