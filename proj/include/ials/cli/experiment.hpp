#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "ials/cli/commands.hpp"
#include "ials/rl/curve.hpp"
#include "ials/sim/ials.hpp"

namespace ials::cli {

/// One simulator arm. `variant` is set iff `sim` is "ials".
struct ArmSpec {
  std::string name;
  std::string sim = "gs";
  std::string variant;
  json net = json::object();  // predictor network overrides
  int k_pi = 0;               // 0 = environment default
};

inline void to_json(json& j, const ArmSpec& a) {
  j = {{"name", a.name}, {"sim", a.sim}, {"variant", a.variant}, {"net", a.net}, {"k_pi", a.k_pi}};
}

inline void from_json(const json& j, ArmSpec& a) {
  a.name = j.at("name").get<std::string>();
  a.sim = j.value("sim", std::string("gs"));
  a.variant = j.value("variant", std::string());
  a.net = j.value("net", json::object());
  a.k_pi = j.value("k_pi", 0);
}

struct ExperimentSpec {
  std::string env = "warehouse";
  json env_config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  long steps = 200000;
  json ppo = json::object();
  long aip_samples = 10000;      // training set for the influence predictors
  long aip_eval_samples = 5000;  // held-out set for the CE bars
  json aip_train = json::object();
  std::vector<ArmSpec> arms;
  int final_eval_episodes = 0;   // 0 = use the last curve point
  long lifetime_steps = 20000;   // per arm, fixed-lifetime warehouse only
  bool random_baseline = true;
  int workers = 1;

  void validate() const {
    if (arms.empty()) throw ConfigError("experiment: no arms");
    if (seeds.empty()) throw ConfigError("experiment: no seeds");
    if (steps < 0) throw ConfigError("experiment: steps must be >= 0");
    if (workers < 1) throw ConfigError("experiment: workers must be >= 1");
    std::map<std::string, int> names;
    for (const auto& a : arms) {
      if (a.name.empty() || a.name.find_first_of("/\\ ") != std::string::npos) {
        throw ConfigError("experiment: arm names must be non-empty and contain no slashes or spaces");
      }
      if (++names[a.name] > 1) throw ConfigError("experiment: duplicate arm '" + a.name + "'");
      if (a.sim != "gs" && a.sim != "ials") throw ConfigError("experiment: arm '" + a.name + "' has unknown sim '" + a.sim + "'");
      if ((a.sim == "ials") != !a.variant.empty()) {
        throw ConfigError("experiment: arm '" + a.name + "' must name a predictor variant iff its sim is ials");
      }
      if (!a.variant.empty()) aip::variant_from_string(a.variant);
    }
  }
};

inline void to_json(json& j, const ExperimentSpec& s) {
  j = {{"env", s.env},
       {"env_config", s.env_config},
       {"seed", s.seed},
       {"seeds", s.seeds},
       {"steps", s.steps},
       {"ppo", s.ppo},
       {"aip_samples", s.aip_samples},
       {"aip_eval_samples", s.aip_eval_samples},
       {"aip_train", s.aip_train},
       {"arms", s.arms},
       {"final_eval_episodes", s.final_eval_episodes},
       {"lifetime_steps", s.lifetime_steps},
       {"random_baseline", s.random_baseline},
       {"workers", s.workers}};
}

inline void from_json(const json& j, ExperimentSpec& s) {
  const ExperimentSpec d;
  s.env = j.value("env", d.env);
  s.env_config = j.value("env_config", d.env_config);
  s.seed = j.value("seed", d.seed);
  s.seeds = j.value("seeds", d.seeds);
  s.steps = j.value("steps", d.steps);
  s.ppo = j.value("ppo", d.ppo);
  s.aip_samples = j.value("aip_samples", d.aip_samples);
  s.aip_eval_samples = j.value("aip_eval_samples", d.aip_eval_samples);
  s.aip_train = j.value("aip_train", d.aip_train);
  s.arms = j.value("arms", d.arms);
  s.final_eval_episodes = j.value("final_eval_episodes", d.final_eval_episodes);
  s.lifetime_steps = j.value("lifetime_steps", d.lifetime_steps);
  s.random_baseline = j.value("random_baseline", d.random_baseline);
  s.workers = j.value("workers", d.workers);
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  const auto j = nn::read_json_file(path);
  try {
    auto s = parse_config<ExperimentSpec>(j, path);
    s.validate();
    return s;
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    throw ConfigError(what.rfind(path, 0) == 0 ? what : path + ": " + what);
  }
}

struct ArmSeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  rl::LearningCurve curve;
  double final_return = 0.0;
  double final_stderr = 0.0;
  double train_seconds = 0.0;
};

struct ArmResult {
  ArmSpec spec;
  bool ok = false;  // predictor built and every seed finished
  std::string error;
  double aip_seconds = 0.0;
  double ce_heldout = std::nan("");
  std::vector<ArmSeedResult> seeds;
  rl::AggregateCurve aggregate;
  warehouse::LifetimeStats lifetimes;
  bool has_lifetimes = false;

  std::vector<double> finals() const {
    std::vector<double> v;
    for (const auto& s : seeds) {
      if (s.ok) v.push_back(s.final_return);
    }
    return v;
  }
  double final_mean() const {
    const auto v = finals();
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? std::nan("") : m / static_cast<double>(v.size());
  }
  /// Sample standard deviation of the final returns across seeds.
  double final_std() const {
    const auto v = finals();
    if (v.size() < 2) return 0.0;
    const double m = final_mean();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  }
  double mean_train_seconds() const {
    double t = 0.0;
    int n = 0;
    for (const auto& s : seeds) {
      if (s.ok) {
        t += s.train_seconds;
        ++n;
      }
    }
    return n > 0 ? t / n : 0.0;
  }
};

struct ExperimentReport {
  std::vector<ArmResult> arms;
  double random_mean = std::nan("");
  double random_stderr = std::nan("");

  const ArmResult& arm(const std::string& name) const {
    for (const auto& a : arms) {
      if (a.spec.name == name) return a;
    }
    throw ConfigError("no arm named '" + name + "'");
  }
  bool all_ok() const {
    for (const auto& a : arms) {
      if (!a.ok) return false;
    }
    return true;
  }
  json summary() const {
    json arms_j = json::array();
    for (const auto& a : arms) {
      json seeds_j = json::array();
      for (const auto& s : a.seeds) {
        seeds_j.push_back({{"seed", s.seed}, {"ok", s.ok}, {"error", s.error}, {"final_return", s.final_return},
                           {"final_stderr", s.final_stderr}, {"train_seconds", s.train_seconds}});
      }
      arms_j.push_back({{"name", a.spec.name}, {"sim", a.spec.sim}, {"variant", a.spec.variant}, {"ok", a.ok},
                        {"error", a.error}, {"aip_seconds", a.aip_seconds},
                        {"ce_heldout", std::isnan(a.ce_heldout) ? json(nullptr) : json(a.ce_heldout)},
                        {"final_mean", a.final_mean()}, {"final_std", a.final_std()}, {"seeds", seeds_j}});
    }
    json j = {{"arms", arms_j}};
    if (!std::isnan(random_mean)) j["random_baseline"] = {{"mean", random_mean}, {"stderr", random_stderr}};
    return j;
  }
};

/// Runs the random-action policy on an IALS and tallies the local item
/// lifetimes.
inline warehouse::LifetimeStats ials_lifetimes(IalsInstance& sim, long steps, std::uint64_t seed) {
  auto* ls = dynamic_cast<warehouse::WarehouseLocalSimulator*>(&sim.local());
  if (ls == nullptr) throw ConfigError("lifetime histograms need the warehouse local simulator");
  ls->clear_lifetimes();
  Rng root(seed);
  Rng act = root.split("act");
  const int na = sim.descriptor().num_actions;
  long n = 0;
  for (std::uint64_t ep = 0; n < steps; ++ep) {
    sim.reset(root.split("episode", ep).next_u64());
    for (bool done = false; !done && n < steps; ++n) done = sim.step(Action{act.uniform_int(na)}).done;
  }
  return ls->lifetimes();
}

inline void write_lifetime_csv(const std::string& path, const warehouse::LifetimeStats& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  std::map<int, std::pair<long, long>> rows;
  for (const auto& [k, v] : s.removed) rows[k].first = v;
  for (const auto& [k, v] : s.collected) rows[k].second = v;
  out << "lifetime,removed,collected\n";
  for (const auto& [k, v] : rows) out << k << "," << v.first << "," << v.second << "\n";
  if (!out) throw IoError("write failed for " + path);
}

/// Runs every arm over every seed. Arms share one training dataset and one
/// held-out dataset. Arm-level and seed-level failures are recorded and the
/// rest still run. With `out`, writes per-arm curves and aggregates,
/// runtime_bars.csv, ce_bars.csv, lifetime histograms, summary.json and a
/// manifest.
inline ExperimentReport cmd_experiment(const ExperimentSpec& spec, const std::string& out) {
  spec.validate();
  Stopwatch total;
  const auto env = Environment::make(spec.env, spec.env_config);
  const auto tc = parse_config<aip::TrainConfig>(spec.aip_train, "aip_train");
  const Rng root(spec.seed);
  ExperimentReport rep;

  std::vector<aip::NetConfig> nets;
  int k_max = 1;
  bool need_data = false;
  for (const auto& a : spec.arms) {
    ArmResult r;
    r.spec = a;
    rep.arms.push_back(r);
    const auto v = a.sim == "ials" ? aip::variant_from_string(a.variant) : aip::Variant::untrained;
    aip::NetConfig net;
    try {
      net = net_for_variant(v, a.net);
    } catch (const ConfigError& e) {
      rep.arms.back().error = e.what();
    }
    nets.push_back(net);
    k_max = std::max(k_max, net.k);
    need_data = need_data || a.sim == "ials";
  }

  // shared datasets
  std::unique_ptr<aip::InfluenceDataset> train_data, eval_data;
  double collect_seconds = 0.0;
  if (need_data) {
    Stopwatch sw;
    auto gs = env.global();
    UniformRandomPolicy pi0(gs->descriptor().num_actions);
    train_data = std::make_unique<aip::InfluenceDataset>(
        aip::collect_dataset(*gs, pi0, spec.aip_samples, k_max, root.split("collect").next_u64()));
    collect_seconds = sw.seconds();
    eval_data = std::make_unique<aip::InfluenceDataset>(
        aip::collect_dataset(*gs, pi0, spec.aip_eval_samples, k_max, root.split("collect-eval").next_u64()));
  }

  // predictors
  std::vector<std::shared_ptr<const aip::InfluencePredictor>> preds(spec.arms.size());
  for (std::size_t i = 0; i < spec.arms.size(); ++i) {
    auto& arm = rep.arms[i];
    if (arm.spec.sim != "ials" || !arm.error.empty()) continue;
    try {
      const auto v = aip::variant_from_string(arm.spec.variant);
      auto built = build_predictor(v, nets[i], tc, train_data.get(), &env, root.split("aip", i).next_u64());
      preds[i] = built.predictor;
      arm.aip_seconds = built.train_seconds + (variant_needs_data(v) ? collect_seconds : 0.0);
      arm.ce_heldout = aip::evaluate_ce(*built.predictor, *eval_data);
      if (!out.empty()) {
        make_out_dir(out + "/predictors");
        aip::save_predictor(*built.predictor, out + "/predictors/" + arm.spec.name + ".json");
      }
    } catch (const Error& e) {
      arm.error = e.what();
    }
  }

  // arm x seed jobs
  struct Job {
    std::size_t arm;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < spec.arms.size(); ++i) {
    rep.arms[i].seeds.resize(spec.seeds.size());
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
      rep.arms[i].seeds[s].seed = spec.seeds[s];
      if (rep.arms[i].error.empty()) jobs.push_back({i, s});
    }
  }
  auto run_job = [&](const Job& job) {
    auto& arm = rep.arms[job.arm];
    auto& res = arm.seeds[job.seed];
    try {
      auto cfg = resolve_ppo(spec.ppo, arm.spec.k_pi, env);
      cfg.total_steps = spec.steps;
      std::unique_ptr<Simulator> sim;
      rl::RunInfo info;
      if (arm.spec.sim == "ials") {
        sim = std::make_unique<IalsInstance>(env.local(), preds[job.arm]);
        info.sim_kind = "ials:" + arm.spec.variant;
        info.aip_offset_s = arm.aip_seconds;
      } else {
        sim = env.global();
      }
      auto eval = env.global();
      // the same seed index gives every arm the same policy seed
      const auto seed = root.split("policy", spec.seeds[job.seed]).next_u64();
      auto o = rl::train_policy(*sim, *eval, cfg, seed, info);
      res.curve = std::move(o.curve);
      res.train_seconds = o.train_seconds;
      if (spec.final_eval_episodes > 0) {
        const auto r = rl::evaluate(o.policy, *eval, spec.final_eval_episodes, root.split("final-eval", spec.seeds[job.seed]).next_u64());
        res.final_return = r.mean;
        res.final_stderr = r.std_error;
      } else {
        res.final_return = res.curve.final_point().mean_return;
        res.final_stderr = res.curve.final_point().std_error;
      }
      res.ok = true;
    } catch (const Error& e) {
      res.error = e.what();
    }
  };
  if (spec.workers == 1 || jobs.size() < 2) {
    for (const auto& j : jobs) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<int>(spec.workers, static_cast<int>(jobs.size())); ++w) {
      pool.emplace_back([&] {
        for (std::size_t j; (j = next++) < jobs.size();) run_job(jobs[j]);
      });
    }
    for (auto& t : pool) t.join();
  }

  // reduce
  for (std::size_t i = 0; i < rep.arms.size(); ++i) {
    auto& arm = rep.arms[i];
    std::vector<rl::LearningCurve> curves;
    bool all = arm.error.empty();
    for (const auto& s : arm.seeds) {
      if (s.ok) {
        curves.push_back(s.curve);
      } else {
        all = false;
      }
    }
    arm.ok = all;
    if (!curves.empty()) arm.aggregate = rl::AggregateCurve::of(curves);
    const bool fixed_lifetime = env.is_warehouse() && env.config().value("lifetime_mode", std::string()) == "fixed";
    if (fixed_lifetime && preds[i] && spec.lifetime_steps > 0) {
      IalsInstance sim(env.local(), preds[i]);
      arm.lifetimes = ials_lifetimes(sim, spec.lifetime_steps, root.split("lifetimes", i).next_u64());
      arm.has_lifetimes = true;
    }
  }
  if (spec.random_baseline) {
    auto gs = env.global();
    UniformRandomPolicy p(gs->descriptor().num_actions);
    const int eps = spec.final_eval_episodes > 0 ? spec.final_eval_episodes : 10;
    const auto r = rl::evaluate(p, *gs, eps, root.split("random-baseline").next_u64());
    rep.random_mean = r.mean;
    rep.random_stderr = r.std_error;
  }

  if (!out.empty()) {
    make_out_dir(out);
    std::ofstream runtime(out + "/runtime_bars.csv"), ce(out + "/ce_bars.csv");
    runtime << "arm,aip_seconds,mean_train_seconds,total_wall_clock_s\n";
    ce << "arm,variant,ce_heldout\n";
    for (const auto& a : rep.arms) {
      const auto dir = out + "/arms/" + a.spec.name;
      make_out_dir(dir);
      for (const auto& s : a.seeds) {
        if (s.ok) s.curve.write_csv(dir + "/curve_seed" + std::to_string(s.seed) + ".csv");
      }
      if (!a.aggregate.points.empty()) a.aggregate.write_csv(dir + "/aggregate.csv");
      runtime << a.spec.name << "," << rl::format_number(a.aip_seconds) << "," << rl::format_number(a.mean_train_seconds())
              << "," << rl::format_number(a.aip_seconds + a.mean_train_seconds()) << "\n";
      if (!std::isnan(a.ce_heldout)) ce << a.spec.name << "," << a.spec.variant << "," << rl::format_number(a.ce_heldout) << "\n";
      if (a.has_lifetimes) write_lifetime_csv(out + "/lifetimes_" + a.spec.name + ".csv", a.lifetimes);
    }
    if (!runtime || !ce) throw IoError("write failed in " + out);
    nn::write_json_file(out + "/summary.json", rep.summary());
    Manifest{"experiment", json(spec), spec.seed, total.seconds(), {{"all_ok", rep.all_ok()}}}.write(out);
  }
  return rep;
}

}  // namespace ials::cli
