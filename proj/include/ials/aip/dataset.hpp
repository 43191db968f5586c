#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/core/simulator.hpp"
#include "ials/core/window.hpp"

namespace ials::aip {

using json = nlohmann::json;

inline constexpr const char* kDatasetFormat = "ials-influence-dataset";
inline constexpr int kDatasetVersion = 1;

/// One training example: the d-set window before a step and the influence the
/// step realized.
struct InfluenceSample {
  std::vector<DSetRow> window;  // oldest first, at most k rows
  InfluenceValue target;
  int episode = 0;
  int t = 0;
};

struct DatasetProvenance {
  std::string env_id;
  std::string policy;
  std::uint64_t seed = 0;
  long n = 0;
  int k = 1;
  int dset_width = 0;
  std::vector<int> influence_classes;
};

/// Full d-set sequence of one episode, reconstructed from consecutive samples:
/// rows[t] is the newest row of sample t.
struct EpisodeSequence {
  int episode = 0;
  std::vector<DSetRow> rows;
  std::vector<InfluenceValue> targets;
};

class InfluenceDataset {
 public:
  DatasetProvenance provenance;
  std::vector<InfluenceSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  void validate() const {
    for (const auto& s : samples) {
      if (s.window.empty() || s.window.size() > static_cast<std::size_t>(provenance.k)) {
        throw ShapeError("dataset: window length outside [1, k]");
      }
      for (const auto& r : s.window) {
        if (static_cast<int>(r.size()) != provenance.dset_width) throw ShapeError("dataset: d-set width mismatch");
      }
      validate_influence(s.target, provenance.influence_classes);
    }
  }

  /// Per-head empirical class frequencies.
  std::vector<std::vector<double>> head_marginals() const {
    std::vector<std::vector<double>> f;
    for (int c : provenance.influence_classes) f.emplace_back(static_cast<std::size_t>(c), 0.0);
    if (samples.empty()) return f;
    for (const auto& s : samples) {
      for (std::size_t m = 0; m < f.size(); ++m) f[m][static_cast<std::size_t>(s.target[m])] += 1.0;
    }
    for (auto& head : f) {
      for (auto& v : head) v /= static_cast<double>(samples.size());
    }
    return f;
  }

  /// Episodes in order of appearance. Samples of an episode must be
  /// consecutive with t = 0, 1, 2, ...
  std::vector<EpisodeSequence> episodes() const {
    std::vector<EpisodeSequence> out;
    for (const auto& s : samples) {
      if (out.empty() || out.back().episode != s.episode || s.t == 0) {
        if (s.t != 0) throw ShapeError("dataset: episode does not start at t = 0");
        out.push_back({s.episode, {}, {}});
      }
      auto& e = out.back();
      if (static_cast<int>(e.rows.size()) != s.t) throw ShapeError("dataset: episode samples are not consecutive");
      e.rows.push_back(s.window.back());
      e.targets.push_back(s.target);
    }
    return out;
  }

  /// Deterministic split by episode: every `every`-th episode (counting from
  /// `offset`) goes to the second part.
  std::pair<InfluenceDataset, InfluenceDataset> split_by_episode(int every = 10, int offset = 0) const {
    std::pair<InfluenceDataset, InfluenceDataset> out;
    out.first.provenance = out.second.provenance = provenance;
    int index = -1, last = -1;
    bool first_sample = true;
    for (const auto& s : samples) {
      if (first_sample || s.episode != last || s.t == 0) ++index;
      first_sample = false;
      last = s.episode;
      (index % every == offset ? out.second : out.first).samples.push_back(s);
    }
    out.first.provenance.n = static_cast<long>(out.first.samples.size());
    out.second.provenance.n = static_cast<long>(out.second.samples.size());
    return out;
  }

  void save_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    json header = {{"format", kDatasetFormat},
                   {"version", kDatasetVersion},
                   {"env_id", provenance.env_id},
                   {"policy", provenance.policy},
                   {"seed", provenance.seed},
                   {"n", static_cast<long>(samples.size())},
                   {"k", provenance.k},
                   {"dset_width", provenance.dset_width},
                   {"influence_classes", provenance.influence_classes}};
    out << header.dump() << "\n";
    for (const auto& s : samples) {
      json w = json::array();
      for (const auto& r : s.window) w.push_back(r.to_string());
      out << json{{"episode", s.episode}, {"t", s.t}, {"window", w}, {"target", s.target.classes}}.dump() << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
  }

  static InfluenceDataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    InfluenceDataset d;
    std::string line;
    long lineno = 0;
    auto fail = [&](const std::string& what) { return IoError(path + ":" + std::to_string(lineno) + ": " + what); };
    try {
      if (!std::getline(in, line)) throw fail("empty file");
      ++lineno;
      const auto h = json::parse(line);
      if (h.value("format", std::string()) != kDatasetFormat) throw fail("not an influence dataset");
      if (h.value("version", 0) != kDatasetVersion) throw fail("unsupported dataset version");
      d.provenance.env_id = h.at("env_id").get<std::string>();
      d.provenance.policy = h.at("policy").get<std::string>();
      d.provenance.seed = h.at("seed").get<std::uint64_t>();
      d.provenance.n = h.at("n").get<long>();
      d.provenance.k = h.at("k").get<int>();
      d.provenance.dset_width = h.at("dset_width").get<int>();
      d.provenance.influence_classes = h.at("influence_classes").get<std::vector<int>>();
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto r = json::parse(line);
        InfluenceSample s;
        s.episode = r.at("episode").get<int>();
        s.t = r.at("t").get<int>();
        for (const auto& w : r.at("window")) s.window.push_back(DSetRow::from_string(w.get<std::string>()));
        s.target = InfluenceValue(r.at("target").get<std::vector<int>>());
        d.samples.push_back(std::move(s));
      }
    } catch (const json::exception& e) {
      throw fail(e.what());
    } catch (const ConfigError& e) {
      throw fail(e.what());
    }
    if (static_cast<long>(d.samples.size()) != d.provenance.n) throw IoError(path + ": record count does not match header");
    try {
      d.validate();
    } catch (const ShapeError& e) {
      throw IoError(path + ": " + e.what());
    }
    return d;
  }
};

/// Runs `policy` on the global simulator and records (window, realized
/// influence) at every step until `n` samples exist. Episode e is reset with a
/// seed derived from (seed, e).
inline InfluenceDataset collect_dataset(GlobalSimulator& gs, Policy& policy, long n, int k, std::uint64_t seed,
                                        const std::string& policy_name = "uniform-random") {
  if (n < 1) throw ConfigError("collect_dataset: n must be >= 1");
  if (k < 1) throw ConfigError("collect_dataset: k must be >= 1");
  const auto& desc = gs.descriptor();
  InfluenceDataset d;
  d.provenance = {desc.env_id, policy_name, seed, n, k, desc.dset_width, desc.influence_classes};
  d.samples.reserve(static_cast<std::size_t>(n));
  Rng root(seed);
  Rng act_rng = root.split("policy");
  for (int ep = 0; static_cast<long>(d.samples.size()) < n; ++ep) {
    Observation obs = gs.reset(root.split("episode", static_cast<std::uint64_t>(ep)).next_u64());
    policy.begin_episode();
    DSetWindow window(static_cast<std::size_t>(k));
    window.push(gs.dset_row());
    for (int t = 0; static_cast<long>(d.samples.size()) < n; ++t) {
      const Action a = policy.act(obs, act_rng);
      auto r = gs.step(a);
      InfluenceSample s;
      s.window.assign(window.rows().begin(), window.rows().end());
      s.target = gs.last_influence();
      s.episode = ep;
      s.t = t;
      d.samples.push_back(std::move(s));
      window.push(gs.dset_row());
      obs = std::move(r.observation);
      if (r.done) break;
    }
  }
  return d;
}

}  // namespace ials::aip
