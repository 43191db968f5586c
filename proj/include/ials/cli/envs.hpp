#pragma once

#include <memory>
#include <string>
#include <variant>

#include <json.hpp>

#include "ials/aip/predictor.hpp"
#include "ials/exact/toy_sim.hpp"
#include "ials/nn/checkpoint.hpp"
#include "ials/traffic/traffic.hpp"
#include "ials/warehouse/simulators.hpp"

namespace ials::cli {

using json = nlohmann::json;

/// Throws ConfigError for keys in `given` that the parsed config does not
/// write back, which catches typos in hand-edited files.
inline void reject_unknown_keys(const json& given, const json& known, const std::string& where) {
  if (!given.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : given.items()) {
    if (!known.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
T parse_config(const json& j, const std::string& where) {
  try {
    T c = j.get<T>();
    reject_unknown_keys(j, json(c), where);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// Toy instances come from a generator or from a descriptor file.
struct ToyEnvConfig {
  std::string kind = "chain";
  int cells = 8;
  std::uint64_t seed = 1;
  int episode_length = 8;
  std::string file;  // overrides the generator when set
};

inline void to_json(json& j, const ToyEnvConfig& c) {
  j = {{"kind", c.kind}, {"cells", c.cells}, {"seed", c.seed}, {"episode_length", c.episode_length}, {"file", c.file}};
}

inline void from_json(const json& j, ToyEnvConfig& c) {
  const ToyEnvConfig d;
  c.kind = j.value("kind", d.kind);
  c.cells = j.value("cells", d.cells);
  c.seed = j.value("seed", d.seed);
  c.episode_length = j.value("episode_length", d.episode_length);
  c.file = j.value("file", d.file);
}

/// A named environment with its resolved configuration. Hands out fresh
/// global and local simulators.
class Environment {
 public:
  static Environment make(const std::string& name, const json& overrides = json::object()) {
    Environment e;
    e.name_ = name;
    const json& o = overrides.is_null() ? json::object() : overrides;
    if (name == "warehouse" || name == "warehouse-fixed8") {
      json base = name == "warehouse" ? json(warehouse::WarehouseConfig{}) : json(warehouse::WarehouseConfig::fixed_lifetime(8));
      base.update(o);
      e.cfg_ = parse_config<warehouse::WarehouseConfig>(base, name);
    } else if (name == "traffic") {
      json base = traffic::TrafficConfig{};
      base.update(o);
      e.cfg_ = parse_config<traffic::TrafficConfig>(base, name);
    } else if (name == "toy-dbn") {
      const auto tc = parse_config<ToyEnvConfig>(o, name);
      exact::ToyDbn d;
      if (!tc.file.empty()) {
        try {
          d = exact::ToyDbn::from_json(nn::read_json_file(tc.file));
        } catch (const json::exception& ex) {
          throw IoError(tc.file + ": malformed toy instance: " + ex.what());
        }
      } else {
        d = exact::make_toy(tc.kind, tc.cells, tc.seed, tc.episode_length);
      }
      e.toy_cfg_ = tc;
      e.cfg_ = std::make_shared<const exact::ToyDbn>(std::move(d));
    } else {
      throw ConfigError("unknown environment '" + name + "' (expected warehouse, warehouse-fixed8, traffic or toy-dbn)");
    }
    return e;
  }

  const std::string& name() const { return name_; }

  json config() const {
    if (auto* w = std::get_if<warehouse::WarehouseConfig>(&cfg_)) return *w;
    if (auto* t = std::get_if<traffic::TrafficConfig>(&cfg_)) return *t;
    return toy_cfg_;
  }

  EnvDescriptor descriptor() const { return global()->descriptor(); }

  std::unique_ptr<GlobalSimulator> global() const {
    if (auto* w = std::get_if<warehouse::WarehouseConfig>(&cfg_)) return std::make_unique<warehouse::WarehouseGlobalSimulator>(*w);
    if (auto* t = std::get_if<traffic::TrafficConfig>(&cfg_)) return std::make_unique<traffic::TrafficGlobalSimulator>(*t);
    return std::make_unique<exact::ToyGlobalSimulator>(toy());
  }

  std::unique_ptr<LocalSimulator> local() const {
    if (auto* w = std::get_if<warehouse::WarehouseConfig>(&cfg_)) return std::make_unique<warehouse::WarehouseLocalSimulator>(*w);
    if (auto* t = std::get_if<traffic::TrafficConfig>(&cfg_)) return std::make_unique<traffic::TrafficLocalSimulator>(*t);
    return std::make_unique<exact::ToyLocalSimulator>(toy());
  }

  SimulatorFactory global_factory() const {
    return [e = *this] { return std::unique_ptr<Simulator>(e.global()); };
  }

  /// Null unless this is the toy environment.
  std::shared_ptr<const exact::ToyDbn> toy() const {
    auto* p = std::get_if<std::shared_ptr<const exact::ToyDbn>>(&cfg_);
    return p != nullptr ? *p : nullptr;
  }

  bool is_warehouse() const { return std::holds_alternative<warehouse::WarehouseConfig>(cfg_); }

  /// Observation stack depth the agent gets unless told otherwise.
  int default_k_pi() const { return is_warehouse() ? 8 : 1; }

 private:
  std::string name_;
  std::variant<warehouse::WarehouseConfig, traffic::TrafficConfig, std::shared_ptr<const exact::ToyDbn>> cfg_;
  ToyEnvConfig toy_cfg_;
};

}  // namespace ials::cli
