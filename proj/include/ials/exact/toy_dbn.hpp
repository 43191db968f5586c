#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/core/error.hpp"
#include "ials/core/rng.hpp"
#include "ials/core/types.hpp"

namespace ials::exact {

using json = nlohmann::json;

/// P(cell' = 1 | parent bits, action). Entry index is the parent bits packed
/// little-endian in `parents` order, plus `action << parents.size()` when the
/// cell depends on the action.
struct CellCpt {
  std::vector<int> parents;
  bool action_dependent = false;
  std::vector<double> p_one;

  std::size_t table_size(int num_actions) const {
    return (std::size_t{1} << parents.size()) * (action_dependent ? static_cast<std::size_t>(num_actions) : 1);
  }
};

/// Small factored binary DBN with a local region, one influence-source cell,
/// and the remaining cells hidden. Joint states are bitmasks over cells.
class ToyDbn {
 public:
  std::string name = "toy";
  std::uint64_t seed = 0;
  int num_cells = 0;
  int num_actions = 2;
  std::vector<int> local_cells;
  int u_cell = -1;
  std::vector<CellCpt> cpts;
  std::vector<double> prior_one;
  std::vector<double> reward;  // [x * num_actions + a]
  std::vector<int> dset_cells;  // local cells kept in the d-set row
  bool dset_actions = true;     // prepend a one-hot of the previous action
  int episode_length = 8;

  /// Validates the structure and builds the dense transition tables.
  void finalize() {
    if (num_cells < 2 || num_cells > 12) throw ConfigError("toy dbn: num_cells must be in [2, 12]");
    if (num_actions < 1) throw ConfigError("toy dbn: num_actions must be >= 1");
    if (static_cast<int>(cpts.size()) != num_cells) throw ConfigError("toy dbn: one CPT per cell required");
    if (static_cast<int>(prior_one.size()) != num_cells) throw ConfigError("toy dbn: one prior per cell required");
    if (local_cells.empty()) throw ConfigError("toy dbn: empty local region");
    if (u_cell < 0 || u_cell >= num_cells) throw ConfigError("toy dbn: u cell out of range");
    if (is_local(u_cell)) throw ConfigError("toy dbn: u cell must be outside the local region");
    for (int c : dset_cells) {
      if (!is_local(c)) throw ConfigError("toy dbn: d-set cells must be local");
    }
    for (int i = 0; i < num_cells; ++i) {
      const auto& cpt = cpts[static_cast<std::size_t>(i)];
      if (cpt.p_one.size() != cpt.table_size(num_actions)) {
        throw ConfigError("toy dbn: CPT of cell " + std::to_string(i) + " has the wrong size");
      }
      for (double p : cpt.p_one) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("toy dbn: CPT entry outside [0,1]");
      }
      for (int par : cpt.parents) {
        if (par < 0 || par >= num_cells) throw ConfigError("toy dbn: parent out of range");
        if (is_local(i) && !is_local(par) && par != u_cell) {
          throw ConfigError("toy dbn: local cell " + std::to_string(i) + " has a non-local parent other than u");
        }
      }
    }
    if (static_cast<int>(reward.size()) != num_local_states() * num_actions) {
      throw ConfigError("toy dbn: reward table must have one entry per (x, a)");
    }
    build_transitions();
  }

  int num_states() const { return 1 << num_cells; }
  int num_local_states() const { return 1 << static_cast<int>(local_cells.size()); }
  int local_width() const { return static_cast<int>(local_cells.size()); }
  int dset_width() const { return (dset_actions ? num_actions : 0) + static_cast<int>(dset_cells.size()); }

  bool is_local(int cell) const { return std::find(local_cells.begin(), local_cells.end(), cell) != local_cells.end(); }

  static int bit(int s, int cell) { return (s >> cell) & 1; }

  /// Local-state index of joint state s.
  int local_index(int s) const {
    int x = 0;
    for (std::size_t j = 0; j < local_cells.size(); ++j) x |= bit(s, local_cells[j]) << j;
    return x;
  }

  int u_value(int s) const { return bit(s, u_cell); }

  double cell_p_one(int cell, int s, int a) const {
    const auto& cpt = cpts[static_cast<std::size_t>(cell)];
    std::size_t idx = 0;
    for (std::size_t p = 0; p < cpt.parents.size(); ++p) idx |= static_cast<std::size_t>(bit(s, cpt.parents[p])) << p;
    if (cpt.action_dependent) idx += static_cast<std::size_t>(a) << cpt.parents.size();
    return cpt.p_one[idx];
  }

  double prior(int s) const {
    double p = 1.0;
    for (int i = 0; i < num_cells; ++i) p *= bit(s, i) ? prior_one[static_cast<std::size_t>(i)] : 1.0 - prior_one[static_cast<std::size_t>(i)];
    return p;
  }

  /// P(s' | s, a) from the dense table.
  double transition(int a, int s, int s2) const {
    return trans_[(static_cast<std::size_t>(a) * num_states() + s) * num_states() + s2];
  }

  /// Row of P(. | s, a).
  const double* transition_row(int a, int s) const {
    return &trans_[(static_cast<std::size_t>(a) * num_states() + s) * num_states()];
  }

  /// Local transition T(x' | x, u, a).
  double local_transition(int x2, int x, int u, int a) const {
    int s = u << u_cell;
    for (std::size_t j = 0; j < local_cells.size(); ++j) s |= ((x >> j) & 1) << local_cells[j];
    double p = 1.0;
    for (std::size_t j = 0; j < local_cells.size(); ++j) {
      const double p1 = cell_p_one(local_cells[j], s, a);
      p *= ((x2 >> j) & 1) ? p1 : 1.0 - p1;
    }
    return p;
  }

  double reward_of(int x, int a) const { return reward[static_cast<std::size_t>(x * num_actions + a)]; }

  Bits local_bits(int x) const {
    Bits b(local_cells.size());
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = static_cast<std::uint8_t>((x >> j) & 1);
    return b;
  }

  /// D-set row for local state x reached by previous action `prev_action`
  /// (-1 at the first step).
  Bits dset_bits(int x, int prev_action) const {
    Bits b;
    b.reserve(static_cast<std::size_t>(dset_width()));
    if (dset_actions) {
      for (int a = 0; a < num_actions; ++a) b.push_back(a == prev_action ? 1 : 0);
    }
    for (int c : dset_cells) {
      const auto j = std::find(local_cells.begin(), local_cells.end(), c) - local_cells.begin();
      b.push_back(static_cast<std::uint8_t>((x >> j) & 1));
    }
    return b;
  }

  json to_json() const {
    json j;
    j["name"] = name;
    j["seed"] = seed;
    j["num_cells"] = num_cells;
    j["num_actions"] = num_actions;
    j["local_cells"] = local_cells;
    j["u_cell"] = u_cell;
    j["prior_one"] = prior_one;
    j["reward"] = reward;
    j["dset_cells"] = dset_cells;
    j["dset_actions"] = dset_actions;
    j["episode_length"] = episode_length;
    json cells = json::array();
    for (const auto& c : cpts) {
      cells.push_back({{"parents", c.parents}, {"action_dependent", c.action_dependent}, {"p_one", c.p_one}});
    }
    j["cpts"] = cells;
    return j;
  }

  static ToyDbn from_json(const json& j) {
    ToyDbn d;
    try {
      d.name = j.value("name", std::string("toy"));
      d.seed = j.value("seed", std::uint64_t{0});
      d.num_cells = j.at("num_cells").get<int>();
      d.num_actions = j.value("num_actions", 2);
      d.local_cells = j.at("local_cells").get<std::vector<int>>();
      d.u_cell = j.at("u_cell").get<int>();
      d.prior_one = j.at("prior_one").get<std::vector<double>>();
      d.reward = j.at("reward").get<std::vector<double>>();
      d.dset_cells = j.at("dset_cells").get<std::vector<int>>();
      d.dset_actions = j.value("dset_actions", true);
      d.episode_length = j.value("episode_length", 8);
      for (const auto& c : j.at("cpts")) {
        CellCpt cpt;
        cpt.parents = c.at("parents").get<std::vector<int>>();
        cpt.action_dependent = c.value("action_dependent", false);
        cpt.p_one = c.at("p_one").get<std::vector<double>>();
        d.cpts.push_back(std::move(cpt));
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("toy dbn descriptor: ") + e.what());
    }
    d.finalize();
    return d;
  }

 private:
  void build_transitions() {
    const int n = num_states();
    trans_.assign(static_cast<std::size_t>(num_actions) * n * n, 0.0);
    std::vector<double> p1(static_cast<std::size_t>(num_cells));
    for (int a = 0; a < num_actions; ++a) {
      for (int s = 0; s < n; ++s) {
        for (int i = 0; i < num_cells; ++i) p1[static_cast<std::size_t>(i)] = cell_p_one(i, s, a);
        double* row = &trans_[(static_cast<std::size_t>(a) * n + s) * n];
        for (int s2 = 0; s2 < n; ++s2) {
          double p = 1.0;
          for (int i = 0; i < num_cells; ++i) p *= bit(s2, i) ? p1[static_cast<std::size_t>(i)] : 1.0 - p1[static_cast<std::size_t>(i)];
          row[s2] = p;
        }
      }
    }
  }

  std::vector<double> trans_;
};

namespace detail {

inline double draw_prob(Rng& rng) { return 0.05 + 0.9 * rng.uniform(); }

inline CellCpt random_cpt(Rng& rng, std::vector<int> parents, bool action_dependent, int num_actions) {
  CellCpt c;
  c.parents = std::move(parents);
  c.action_dependent = action_dependent;
  c.p_one.resize(c.table_size(num_actions));
  for (auto& p : c.p_one) p = draw_prob(rng);
  return c;
}

inline void random_prior_and_reward(ToyDbn& d, Rng& rng) {
  d.prior_one.resize(static_cast<std::size_t>(d.num_cells));
  for (auto& p : d.prior_one) p = draw_prob(rng);
  d.reward.resize(static_cast<std::size_t>(d.num_local_states() * d.num_actions));
  for (auto& r : d.reward) r = rng.uniform();
}

inline std::vector<int> neighbors(int i, int n) {
  std::vector<int> p;
  for (int j = i - 1; j <= i + 1; ++j) {
    if (j >= 0 && j < n) p.push_back(j);
  }
  return p;
}

}  // namespace detail

/// Chain of B cells: cells 0-1 local, cell 2 the influence source, each cell
/// driven by itself and its two neighbours. The d-set is the full local history.
inline ToyDbn make_chain(int num_cells, std::uint64_t seed, int episode_length = 8) {
  if (num_cells < 4) throw ConfigError("chain toy needs at least 4 cells");
  Rng rng = Rng(seed).split("toy-chain");
  ToyDbn d;
  d.name = "chain";
  d.seed = seed;
  d.num_cells = num_cells;
  d.local_cells = {0, 1};
  d.u_cell = 2;
  for (int i = 0; i < num_cells; ++i) {
    d.cpts.push_back(detail::random_cpt(rng, detail::neighbors(i, num_cells), i < 2, d.num_actions));
  }
  detail::random_prior_and_reward(d, rng);
  d.dset_cells = {0, 1};
  d.dset_actions = true;
  d.episode_length = episode_length;
  d.finalize();
  return d;
}

/// Two local cells where only the second is coupled to u. The d-set is the
/// action history plus the second cell. With `exogenous`, neither the second
/// cell nor anything upstream of u sees the action, so the d-set drops actions.
inline ToyDbn make_split(int num_cells, std::uint64_t seed, bool exogenous, int episode_length = 8) {
  if (num_cells < 4) throw ConfigError("split toy needs at least 4 cells");
  Rng rng = Rng(seed).split(exogenous ? "toy-exogenous" : "toy-split");
  ToyDbn d;
  d.name = exogenous ? "exogenous" : "split";
  d.seed = seed;
  d.num_cells = num_cells;
  d.local_cells = {0, 1};
  d.u_cell = 2;
  d.cpts.push_back(detail::random_cpt(rng, {0, 1}, true, d.num_actions));
  d.cpts.push_back(detail::random_cpt(rng, {1, 2}, !exogenous, d.num_actions));
  for (int i = 2; i < num_cells; ++i) {
    d.cpts.push_back(detail::random_cpt(rng, detail::neighbors(i, num_cells), false, d.num_actions));
  }
  detail::random_prior_and_reward(d, rng);
  d.dset_cells = {1};
  d.dset_actions = !exogenous;
  d.episode_length = episode_length;
  d.finalize();
  return d;
}

/// u is driven only by the second local cell and an i.i.d. hidden cell, so the
/// influence given the full history depends on the last transition alone.
inline ToyDbn make_finite_memory(int num_cells, std::uint64_t seed, int episode_length = 8) {
  if (num_cells < 4) throw ConfigError("finite-memory toy needs at least 4 cells");
  Rng rng = Rng(seed).split("toy-finite-memory");
  ToyDbn d;
  d.name = "finite-memory";
  d.seed = seed;
  d.num_cells = num_cells;
  d.local_cells = {0, 1};
  d.u_cell = 2;
  d.cpts.push_back(detail::random_cpt(rng, {0, 1}, true, d.num_actions));
  d.cpts.push_back(detail::random_cpt(rng, {1, 2}, true, d.num_actions));
  d.cpts.push_back(detail::random_cpt(rng, {1, 3}, false, d.num_actions));
  for (int i = 3; i < num_cells; ++i) d.cpts.push_back(detail::random_cpt(rng, {}, false, d.num_actions));
  detail::random_prior_and_reward(d, rng);
  d.dset_cells = {0, 1};
  d.dset_actions = true;
  d.episode_length = episode_length;
  d.finalize();
  return d;
}

inline ToyDbn make_toy(const std::string& kind, int num_cells, std::uint64_t seed, int episode_length = 8) {
  if (kind == "chain") return make_chain(num_cells, seed, episode_length);
  if (kind == "split") return make_split(num_cells, seed, false, episode_length);
  if (kind == "exogenous") return make_split(num_cells, seed, true, episode_length);
  if (kind == "finite-memory") return make_finite_memory(num_cells, seed, episode_length);
  throw ConfigError("unknown toy kind '" + kind + "'");
}

}  // namespace ials::exact
