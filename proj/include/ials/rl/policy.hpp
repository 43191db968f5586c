#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "ials/core/simulator.hpp"
#include "ials/nn/checkpoint.hpp"
#include "ials/nn/dense.hpp"

namespace ials::rl {

using json = nlohmann::json;
using nn::Matrix;
using nn::Vector;

inline constexpr const char* kPolicyFormat = "ials-policy";
inline constexpr int kPolicyVersion = 1;

struct PolicyConfig {
  int k_pi = 8;  // stacked observations
  std::vector<int> hidden{64, 64};

  void validate() const {
    if (k_pi < 1) throw ConfigError("policy: k_pi must be >= 1");
    if (hidden.empty()) throw ConfigError("policy: at least one hidden layer is required");
    for (int h : hidden) {
      if (h < 1) throw ConfigError("policy: hidden sizes must be >= 1");
    }
  }
};

inline void to_json(json& j, const PolicyConfig& c) { j = {{"k_pi", c.k_pi}, {"hidden", c.hidden}}; }
inline void from_json(const json& j, PolicyConfig& c) {
  const PolicyConfig d;
  c.k_pi = j.value("k_pi", d.k_pi);
  c.hidden = j.value("hidden", d.hidden);
  c.validate();
}

/// The last k observations concatenated oldest first, zero-padded at the front.
class ObsStack {
 public:
  ObsStack(int k, int width) : k_(k), w_(width), buf_(Vector::Zero(k * width)) {}

  void clear() { buf_.setZero(); }

  void push(const Observation& o) {
    if (static_cast<int>(o.size()) != w_) throw ShapeError("policy: observation width mismatch");
    const int keep = (k_ - 1) * w_;
    if (keep > 0) buf_.head(keep) = buf_.segment(w_, keep).eval();
    for (int i = 0; i < w_; ++i) buf_(keep + i) = o[static_cast<std::size_t>(i)];
  }

  const Vector& features() const { return buf_; }
  int width() const { return k_ * w_; }

 private:
  int k_, w_;
  Vector buf_;
};

/// Actor and critic MLPs with tanh hidden layers over stacked observations.
class PolicyNet {
 public:
  PolicyNet(int obs_width, int num_actions, PolicyConfig cfg)
      : cfg_(std::move(cfg)), obs_width_(obs_width), num_actions_(num_actions) {
    cfg_.validate();
    if (obs_width < 1 || num_actions < 1) throw ConfigError("policy: empty observation or action space");
    actor_ = nn::Mlp("pi", input_width(), cfg_.hidden, num_actions, nn::Activation::tanh);
    critic_ = nn::Mlp("vf", input_width(), cfg_.hidden, 1, nn::Activation::tanh);
  }

  /// Default layer init, with the final actor layer scaled down so the
  /// initial policy is close to uniform.
  void init(Rng& rng) {
    actor_.init(rng);
    critic_.init(rng);
    actor_.layers().back().weight.value *= 0.01;
    actor_.layers().back().bias.value.setZero();
  }

  const PolicyConfig& config() const { return cfg_; }
  int obs_width() const { return obs_width_; }
  int num_actions() const { return num_actions_; }
  int input_width() const { return cfg_.k_pi * obs_width_; }

  nn::Mlp& actor() { return actor_; }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& critic() { return critic_; }
  const nn::Mlp& critic() const { return critic_; }

  nn::ParameterList parameters() {
    auto ps = actor_.parameters();
    for (auto* p : critic_.parameters()) ps.push_back(p);
    return ps;
  }

  Matrix logits(const Matrix& x) const { return actor_.forward(x); }
  Matrix values(const Matrix& x) const { return critic_.forward(x); }

  int greedy(const Vector& x) const {
    const Matrix z = actor_.forward(x);
    Eigen::Index best = 0;
    z.col(0).maxCoeff(&best);
    return static_cast<int>(best);
  }

  ObsStack make_stack() const { return ObsStack(cfg_.k_pi, obs_width_); }

  json to_json() {
    return {{"format", kPolicyFormat},
            {"version", kPolicyVersion},
            {"obs_width", obs_width_},
            {"num_actions", num_actions_},
            {"config", cfg_},
            {"parameters", nn::parameters_to_json(parameters())}};
  }

  static PolicyNet from_json(const json& j) {
    try {
      if (j.value("format", std::string()) != kPolicyFormat) throw IoError("not a policy checkpoint");
      if (j.value("version", 0) != kPolicyVersion) throw IoError("unsupported policy checkpoint version");
      PolicyNet p(j.at("obs_width").get<int>(), j.at("num_actions").get<int>(), j.at("config").get<PolicyConfig>());
      nn::parameters_from_json(j.at("parameters"), p.parameters());
      return p;
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed policy checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
      throw IoError(std::string("invalid policy checkpoint: ") + e.what());
    }
  }

  void require_matches(const EnvDescriptor& d) const {
    if (d.obs_width != obs_width_ || d.num_actions != num_actions_) {
      throw ConfigError("policy expects " + std::to_string(obs_width_) + " observation bits and " +
                        std::to_string(num_actions_) + " actions; environment '" + d.env_id + "' has " +
                        std::to_string(d.obs_width) + " and " + std::to_string(d.num_actions));
    }
  }

 private:
  PolicyConfig cfg_;
  int obs_width_;
  int num_actions_;
  nn::Mlp actor_;
  nn::Mlp critic_;
};

inline void save_policy(PolicyNet& p, const std::string& path) { nn::write_json_file(path, p.to_json()); }

inline PolicyNet load_policy(const std::string& path) {
  try {
    return PolicyNet::from_json(nn::read_json_file(path));
  } catch (const IoError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw IoError(path + ": " + what);
  }
}

/// Greedy (argmax) play of a trained network through the Policy interface.
class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(const PolicyNet& net) : net_(net), stack_(net.make_stack()) {}
  void begin_episode() override { stack_.clear(); }
  Action act(const Observation& obs, Rng&) override {
    stack_.push(obs);
    return Action{net_.greedy(stack_.features())};
  }

 private:
  const PolicyNet& net_;
  ObsStack stack_;
};

}  // namespace ials::rl
