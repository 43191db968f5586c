#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "ials/cli/envs.hpp"
#include "ials/cli/manifest.hpp"
#include "ials/cli/predictors.hpp"
#include "ials/cli/verify.hpp"
#include "ials/rl/evaluate.hpp"
#include "ials/rl/ppo.hpp"
#include "ials/sim/ials.hpp"

namespace ials::cli {

namespace fs = std::filesystem;

inline constexpr const char* kDatasetFile = "dataset.jsonl";
inline constexpr const char* kPredictorFile = "predictor.json";
inline constexpr const char* kPolicyFile = "policy.json";
inline constexpr const char* kCurveFile = "curve.csv";
inline constexpr const char* kEvaluationFile = "evaluation.json";

/// An artifact path: a file, or a directory holding `default_name`.
inline std::string resolve_artifact(const std::string& path, const std::string& default_name) {
  if (path.empty()) throw ConfigError("missing path for " + default_name);
  fs::path p(path);
  if (fs::is_directory(p)) p /= default_name;
  if (!fs::exists(p)) throw IoError("missing upstream artifact: " + p.string());
  return p.string();
}

inline std::string dir_of(const std::string& artifact) { return fs::path(artifact).parent_path().string(); }

inline void make_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("an output directory is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out + ": " + ec.message());
}

inline std::unique_ptr<Policy> make_collect_policy(const std::string& name, const EnvDescriptor& d) {
  if (name == "uniform-random") return std::make_unique<UniformRandomPolicy>(d.num_actions);
  if (name == "queue") {
    if (d.env_id.rfind("traffic", 0) != 0) throw ConfigError("the queue policy needs the traffic environment");
    return std::make_unique<traffic::QueuePolicy>();
  }
  if (name.rfind("constant-", 0) == 0) {
    const int a = std::stoi(name.substr(9));
    if (a < 0 || a >= d.num_actions) throw ConfigError("constant policy action out of range");
    return std::make_unique<ConstantPolicy>(a);
  }
  throw ConfigError("unknown policy '" + name + "' (expected uniform-random, queue or constant-<a>)");
}

// ---------------------------------------------------------------------------

struct CollectArgs {
  std::string env = "toy-dbn";
  json env_config = json::object();
  long n = 10000;
  int k = 8;
  std::string policy = "uniform-random";
  std::uint64_t seed = 0;
  std::string out;
};

inline json cmd_collect(const CollectArgs& a) {
  const auto env = Environment::make(a.env, a.env_config);
  make_out_dir(a.out);
  Stopwatch sw;
  auto gs = env.global();
  auto policy = make_collect_policy(a.policy, gs->descriptor());
  const auto data = aip::collect_dataset(*gs, *policy, a.n, a.k, a.seed, a.policy);
  const double secs = sw.seconds();
  data.save_jsonl((fs::path(a.out) / kDatasetFile).string());
  Manifest m{"collect",
             {{"env", a.env}, {"env_config", env.config()}, {"n", a.n}, {"k", a.k}, {"policy", a.policy}},
             a.seed, sw.seconds(), {{"records", data.size()}, {"collect_seconds", secs}}};
  m.write(a.out);
  return {{"records", data.size()}, {"env_id", data.provenance.env_id}, {"path", (fs::path(a.out) / kDatasetFile).string()}};
}

// ---------------------------------------------------------------------------

struct TrainAipArgs {
  std::string dataset;  // file or collect output directory
  std::string variant = "trained-gru";
  json net = json::object();
  json train = json::object();
  std::string env;  // only for exact-oracle and for untrained without a dataset
  json env_config = json::object();
  std::uint64_t seed = 0;
  std::string out;
};

inline json cmd_train_aip(const TrainAipArgs& a) {
  const auto v = aip::variant_from_string(a.variant);
  const auto net = net_for_variant(v, a.net);
  const auto tc = parse_config<aip::TrainConfig>(a.train.is_null() ? json::object() : a.train, "aip train");
  std::unique_ptr<aip::InfluenceDataset> data;
  double collect_seconds = 0.0;
  std::string data_path;
  if (!a.dataset.empty()) {
    data_path = resolve_artifact(a.dataset, kDatasetFile);
    data = std::make_unique<aip::InfluenceDataset>(aip::InfluenceDataset::load_jsonl(data_path));
    const auto m = read_manifest(dir_of(data_path));
    if (!m.is_null()) collect_seconds = m.value("extra", json::object()).value("collect_seconds", 0.0);
  }
  std::unique_ptr<Environment> env;
  if (!a.env.empty()) env = std::make_unique<Environment>(Environment::make(a.env, a.env_config));
  if (data == nullptr && env == nullptr) throw ConfigError("train-aip needs --dataset or --env");
  make_out_dir(a.out);
  Stopwatch sw;
  const auto built = build_predictor(v, net, tc, data.get(), env.get(), a.seed);
  if (env != nullptr) built.predictor->interface().require_matches(env->descriptor());
  const auto path = (fs::path(a.out) / kPredictorFile).string();
  aip::save_predictor(*built.predictor, path);
  json extra = {{"train_seconds", built.train_seconds},
                {"collect_seconds", collect_seconds},
                {"aip_seconds", collect_seconds + built.train_seconds},
                {"train_report", built.report}};
  if (data != nullptr) extra["ce_dataset"] = aip::evaluate_ce(*built.predictor, *data);
  Manifest m{"train-aip",
             {{"dataset", data_path}, {"variant", a.variant}, {"net", net}, {"train", tc}, {"env", a.env},
              {"env_config", env != nullptr ? env->config() : json(nullptr)}},
             a.seed, sw.seconds(), extra};
  m.write(a.out);
  return {{"path", path}, {"variant", a.variant}, {"train_seconds", built.train_seconds}};
}

// ---------------------------------------------------------------------------

struct TrainPolicyArgs {
  std::string env = "toy-dbn";
  json env_config = json::object();
  std::string sim = "gs";
  std::string predictor;  // file or train-aip output directory
  json ppo = json::object();
  int k_pi = 0;           // 0 = environment default
  std::uint64_t seed = 0;
  std::string out;
};

/// Loads a predictor and checks it against the environment; a mismatch is an
/// artifact error.
inline std::shared_ptr<const aip::InfluencePredictor> load_predictor_for(const std::string& path, const Environment& env) {
  std::shared_ptr<const aip::InfluencePredictor> p = aip::load_any_predictor(path);
  try {
    p->interface().require_matches(env.descriptor());
  } catch (const ConfigError& e) {
    throw IoError(path + ": " + e.what());
  }
  return p;
}

inline rl::PpoConfig resolve_ppo(const json& overrides, int k_pi, const Environment& env) {
  json base = rl::PpoConfig{};
  base["policy"]["k_pi"] = env.default_k_pi();
  if (overrides.is_object()) {
    for (const auto& [k, v] : overrides.items()) {
      if (k == "policy" && v.is_object()) {
        base["policy"].update(v);
      } else {
        base[k] = v;
      }
    }
  }
  if (k_pi > 0) base["policy"]["k_pi"] = k_pi;
  return parse_config<rl::PpoConfig>(base, "ppo");
}

inline json cmd_train_policy(const TrainPolicyArgs& a) {
  const auto env = Environment::make(a.env, a.env_config);
  if (a.sim != "gs" && a.sim != "ials") throw ConfigError("--sim must be gs or ials");
  if (a.sim == "ials" && a.predictor.empty()) throw ConfigError("--sim ials requires --predictor");
  if (a.sim == "gs" && !a.predictor.empty()) throw ConfigError("--predictor is only used with --sim ials");
  const auto cfg = resolve_ppo(a.ppo, a.k_pi, env);
  std::unique_ptr<Simulator> sim;
  rl::RunInfo info;
  json pred_info = nullptr;
  if (a.sim == "ials") {
    const auto path = resolve_artifact(a.predictor, kPredictorFile);
    auto p = load_predictor_for(path, env);
    const auto m = read_manifest(dir_of(path));
    if (!m.is_null()) info.aip_offset_s = m.value("extra", json::object()).value("aip_seconds", 0.0);
    info.sim_kind = "ials:" + aip::to_string(p->variant());
    pred_info = {{"path", path}, {"variant", aip::to_string(p->variant())}, {"memory", p->memory()}};
    sim = std::make_unique<IalsInstance>(env.local(), std::move(p));
  } else {
    sim = env.global();
  }
  make_out_dir(a.out);
  Stopwatch sw;
  auto eval = env.global();
  auto o = rl::train_policy(*sim, *eval, cfg, a.seed, info);
  rl::save_policy(o.policy, (fs::path(a.out) / kPolicyFile).string());
  o.curve.write_csv((fs::path(a.out) / kCurveFile).string());
  Manifest m{"train-policy",
             {{"env", a.env}, {"env_config", env.config()}, {"sim", a.sim}, {"predictor", pred_info}, {"ppo", cfg}},
             a.seed, sw.seconds(),
             {{"train_seconds", o.train_seconds}, {"env_steps", o.env_steps}, {"updates", o.updates},
              {"curve", o.curve.metadata()}}};
  m.write(a.out);
  const auto& last = o.curve.final_point();
  return {{"final_return", last.mean_return}, {"stderr", last.std_error}, {"env_steps", o.env_steps}};
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string policy;  // file, train-policy output directory, or "uniform-random"
  std::string env = "toy-dbn";
  json env_config = json::object();
  int episodes = 10;
  std::uint64_t seed = 0;
  std::string out;
};

inline json cmd_evaluate(const EvaluateArgs& a) {
  const auto env = Environment::make(a.env, a.env_config);
  auto gs = env.global();
  rl::EvalResult r;
  std::string source = a.policy;
  if (a.policy == "uniform-random") {
    UniformRandomPolicy p(gs->descriptor().num_actions);
    r = rl::evaluate(p, *gs, a.episodes, a.seed);
  } else {
    source = resolve_artifact(a.policy, kPolicyFile);
    const auto net = rl::load_policy(source);
    try {
      net.require_matches(gs->descriptor());
    } catch (const ConfigError& e) {
      throw IoError(source + ": " + e.what());
    }
    r = rl::evaluate(net, *gs, a.episodes, a.seed);
  }
  const json report = {{"policy", source}, {"env", a.env}, {"mean", r.mean}, {"stderr", r.std_error}, {"episodes", r.episodes}};
  if (!a.out.empty()) {
    make_out_dir(a.out);
    nn::write_json_file((fs::path(a.out) / kEvaluationFile).string(), report);
    Manifest{"evaluate", {{"policy", source}, {"env", a.env}, {"env_config", env.config()}, {"episodes", a.episodes}}, a.seed, 0.0, {}}
        .write(a.out);
  }
  return report;
}

// ---------------------------------------------------------------------------

/// Runs the verification suite. The report holds no timings, so two runs
/// with the same seed produce the same bytes.
inline json cmd_verify(std::uint64_t seed, const std::string& out, bool* all_passed) {
  const auto results = verify::run_suite(seed);
  json checks = json::array();
  bool ok = true;
  for (const auto& c : results) {
    checks.push_back(c.to_json());
    ok = ok && c.passed;
  }
  if (all_passed != nullptr) *all_passed = ok;
  const json report = {{"seed", seed}, {"passed", ok}, {"checks", checks}};
  if (!out.empty()) {
    make_out_dir(out);
    nn::write_json_file((fs::path(out) / "verify.json").string(), report);
  }
  return report;
}

}  // namespace ials::cli
