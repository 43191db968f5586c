#pragma once

#include <string>

#include <json.hpp>

#include "ials/core/error.hpp"

namespace ials::warehouse {

enum class LifetimeMode { unbounded, fixed };

struct WarehouseConfig {
  int robot_grid = 6;          // robots per side
  int region_size = 5;         // cells per region side
  double spawn_prob = 0.02;    // per empty shelf cell per step
  int episode_length = 100;
  LifetimeMode lifetime_mode = LifetimeMode::unbounded;
  int lifetime = 8;            // L, used in fixed mode
  double item_reward = 1.0;
  int controlled_row = 2;
  int controlled_col = 2;

  int stride() const { return region_size - 1; }
  int grid_size() const { return robot_grid * stride() + 1; }
  bool fixed() const { return lifetime_mode == LifetimeMode::fixed; }
  std::string env_id() const { return fixed() ? "warehouse-fixed" + std::to_string(lifetime) : "warehouse"; }

  void validate() const {
    if (region_size != 5) throw ConfigError("warehouse: only 5x5 regions are supported (3 item cells per edge)");
    if (robot_grid < 1 || robot_grid > 16) throw ConfigError("warehouse: robot_grid must be in [1, 16]");
    if (!(spawn_prob >= 0.0 && spawn_prob <= 1.0)) throw ConfigError("warehouse: spawn_prob must be in [0, 1]");
    if (episode_length < 1) throw ConfigError("warehouse: episode_length must be >= 1");
    if (fixed() && lifetime < 1) throw ConfigError("warehouse: lifetime must be >= 1");
    if (controlled_row < 0 || controlled_row >= robot_grid || controlled_col < 0 || controlled_col >= robot_grid) {
      throw ConfigError("warehouse: controlled region outside the robot grid");
    }
  }

  static WarehouseConfig fixed_lifetime(int l = 8) {
    WarehouseConfig c;
    c.lifetime_mode = LifetimeMode::fixed;
    c.lifetime = l;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const WarehouseConfig& c) {
  j = {{"robot_grid", c.robot_grid},
       {"region_size", c.region_size},
       {"spawn_prob", c.spawn_prob},
       {"episode_length", c.episode_length},
       {"lifetime_mode", c.fixed() ? "fixed" : "unbounded"},
       {"lifetime", c.lifetime},
       {"item_reward", c.item_reward},
       {"controlled_row", c.controlled_row},
       {"controlled_col", c.controlled_col}};
}

inline void from_json(const nlohmann::json& j, WarehouseConfig& c) {
  WarehouseConfig d;
  c.robot_grid = j.value("robot_grid", d.robot_grid);
  c.region_size = j.value("region_size", d.region_size);
  c.spawn_prob = j.value("spawn_prob", d.spawn_prob);
  c.episode_length = j.value("episode_length", d.episode_length);
  const auto mode = j.value("lifetime_mode", std::string("unbounded"));
  if (mode == "fixed") {
    c.lifetime_mode = LifetimeMode::fixed;
  } else if (mode == "unbounded") {
    c.lifetime_mode = LifetimeMode::unbounded;
  } else {
    throw ConfigError("warehouse: unknown lifetime_mode '" + mode + "'");
  }
  c.lifetime = j.value("lifetime", d.lifetime);
  c.item_reward = j.value("item_reward", d.item_reward);
  c.controlled_row = j.value("controlled_row", d.controlled_row);
  c.controlled_col = j.value("controlled_col", d.controlled_col);
  c.validate();
}

}  // namespace ials::warehouse
