#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ials/cli/experiment.hpp"

namespace ials::cli {

enum ExitCode { kOk = 0, kCheckFailure = 1, kUsageError = 2, kIoError = 3 };

/// Inline JSON, or `@path` to read it from a file.
inline json parse_json_arg(const std::string& text, const std::string& what) {
  if (text.empty()) return json::object();
  if (text.front() == '@') {
    try {
      return nn::read_json_file(text.substr(1));
    } catch (const IoError& e) {
      throw IoError(what + ": " + e.what());
    }
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

/// Parses and runs one command. Results go to `out` as JSON, errors to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Influence-augmented local simulation toolkit", "ials_cli"};
  app.require_subcommand(1);

  std::string env_config_text, net_text, train_text, ppo_text;

  CollectArgs collect;
  auto* c = app.add_subcommand("collect", "Record (d-set window, influence) samples from the global simulator");
  c->add_option("--env", collect.env, "warehouse, warehouse-fixed8, traffic or toy-dbn")->capture_default_str();
  c->add_option("--env-config", env_config_text, "JSON overrides, or @file");
  c->add_option("--n", collect.n, "number of samples")->capture_default_str();
  c->add_option("--k", collect.k, "window rows per sample")->capture_default_str();
  c->add_option("--policy", collect.policy, "uniform-random, queue or constant-<a>")->capture_default_str();
  c->add_option("--seed", collect.seed)->capture_default_str();
  c->add_option("--out", collect.out, "output directory")->required();

  TrainAipArgs aip_args;
  auto* ta = app.add_subcommand("train-aip", "Build an influence predictor");
  ta->add_option("--dataset", aip_args.dataset, "dataset file or collect output directory");
  ta->add_option("--variant", aip_args.variant, "trained-gru, trained-ff, untrained, fixed-marginal or exact-oracle")
      ->capture_default_str();
  ta->add_option("--net", net_text, "network JSON, or @file");
  ta->add_option("--train", train_text, "training JSON, or @file");
  ta->add_option("--env", aip_args.env, "environment (exact-oracle, or untrained without a dataset)");
  ta->add_option("--env-config", env_config_text, "JSON overrides, or @file");
  ta->add_option("--seed", aip_args.seed)->capture_default_str();
  ta->add_option("--out", aip_args.out, "output directory")->required();

  TrainPolicyArgs tp;
  long steps = -1;
  auto* p = app.add_subcommand("train-policy", "Train a policy on the global simulator or an IALS");
  p->add_option("--env", tp.env)->capture_default_str();
  p->add_option("--env-config", env_config_text, "JSON overrides, or @file");
  p->add_option("--sim", tp.sim, "gs or ials")->capture_default_str();
  p->add_option("--predictor", tp.predictor, "predictor file or train-aip output directory");
  p->add_option("--ppo", ppo_text, "trainer JSON, or @file");
  p->add_option("--steps", steps, "total environment steps");
  p->add_option("--k-pi", tp.k_pi, "observation stack depth (0 = environment default)");
  p->add_option("--seed", tp.seed)->capture_default_str();
  p->add_option("--out", tp.out, "output directory")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate a policy greedily on the global simulator");
  e->add_option("--policy", ev.policy, "policy file, train-policy output directory, or uniform-random")->required();
  e->add_option("--env", ev.env)->capture_default_str();
  e->add_option("--env-config", env_config_text, "JSON overrides, or @file");
  e->add_option("--episodes", ev.episodes)->capture_default_str();
  e->add_option("--seed", ev.seed)->capture_default_str();
  e->add_option("--out", ev.out, "output directory");

  std::string spec_path, exp_out;
  int workers = 0;
  auto* x = app.add_subcommand("experiment", "Run every arm of an experiment spec over its seeds");
  x->add_option("--spec", spec_path, "experiment spec JSON")->required();
  x->add_option("--out", exp_out, "output directory")->required();
  x->add_option("--workers", workers, "parallel jobs (overrides the spec)");

  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* v = app.add_subcommand("verify", "Run the exact, gradient and replay checks");
  v->add_option("--seed", verify_seed)->capture_default_str();
  v->add_option("--out", verify_out, "directory for verify.json");

  ToyEnvConfig toy;
  std::string toy_out;
  auto* t = app.add_subcommand("toy-instance", "Write a toy instance descriptor file");
  t->add_option("--kind", toy.kind, "chain, split, exogenous or finite-memory")->capture_default_str();
  t->add_option("--cells", toy.cells)->capture_default_str();
  t->add_option("--seed", toy.seed)->capture_default_str();
  t->add_option("--episode-length", toy.episode_length)->capture_default_str();
  t->add_option("--out", toy_out, "descriptor file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    std::ostringstream o, er;
    const int code = app.exit(pe, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kOk : kUsageError;
  }

  try {
    const json env_config = parse_json_arg(env_config_text, "--env-config");
    json result;
    int status = kOk;
    if (*c) {
      collect.env_config = env_config;
      result = cmd_collect(collect);
    } else if (*ta) {
      aip_args.net = parse_json_arg(net_text, "--net");
      aip_args.train = parse_json_arg(train_text, "--train");
      aip_args.env_config = env_config;
      result = cmd_train_aip(aip_args);
    } else if (*p) {
      tp.env_config = env_config;
      tp.ppo = parse_json_arg(ppo_text, "--ppo");
      if (steps >= 0) tp.ppo["total_steps"] = steps;
      result = cmd_train_policy(tp);
    } else if (*e) {
      ev.env_config = env_config;
      result = cmd_evaluate(ev);
    } else if (*x) {
      auto spec = load_experiment_spec(spec_path);
      if (workers > 0) spec.workers = workers;
      const auto rep = cmd_experiment(spec, exp_out);
      result = rep.summary();
      if (!rep.all_ok()) status = kCheckFailure;
    } else if (*v) {
      bool ok = false;
      result = cmd_verify(verify_seed, verify_out, &ok);
      if (!ok) status = kCheckFailure;
    } else if (*t) {
      const auto d = exact::make_toy(toy.kind, toy.cells, toy.seed, toy.episode_length);
      nn::write_json_file(toy_out, d.to_json());
      result = {{"path", toy_out}};
    }
    out << result.dump(2) << "\n";
    return status;
  } catch (const ConfigError& ce) {
    err << "error: " << ce.what() << "\n";
    return kUsageError;
  } catch (const IoError& io) {
    err << "error: " << io.what() << "\n";
    return kIoError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kCheckFailure;
  }
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace ials::cli
