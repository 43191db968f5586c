#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ials/nn/gradcheck.hpp"
#include "ials/rl/experiment.hpp"

using namespace ials;
using namespace ials::rl;

namespace {

/// One state, two actions; action 1 pays 1, action 0 pays 0.
class Bandit : public Simulator {
 public:
  explicit Bandit(int length = 10) {
    desc_.env_id = "bandit";
    desc_.obs_width = 1;
    desc_.num_actions = 2;
    desc_.episode_length = length;
  }
  const EnvDescriptor& descriptor() const override { return desc_; }
  Observation reset(std::uint64_t) override {
    t_ = 0;
    return Observation(Bits{1});
  }
  StepResult step(Action a) override {
    ++t_;
    return {Observation(Bits{1}), a.index == 1 ? 1.0 : 0.0, t_ >= desc_.episode_length};
  }

 private:
  EnvDescriptor desc_;
  int t_ = 0;
};

PpoConfig small_config() {
  PpoConfig c;
  c.total_steps = 2048;
  c.horizon = 256;
  c.minibatch = 64;
  c.lr = 3e-3;
  c.eval_every = 512;
  c.eval_episodes = 2;
  c.record_time = false;
  c.policy.k_pi = 1;
  c.policy.hidden = {8};
  return c;
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> i(v.size());
  std::iota(i.begin(), i.end(), std::size_t{0});
  std::stable_sort(i.begin(), i.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return i;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(ObsStack, ConcatenatesOldestFirstWithZeroPadding) {
  ObsStack s(3, 2);
  s.push(Observation(Bits{1, 0}));
  EXPECT_EQ(s.features(), (Vector(6) << 0, 0, 0, 0, 1, 0).finished());
  s.push(Observation(Bits{0, 1}));
  s.push(Observation(Bits{1, 1}));
  s.push(Observation(Bits{0, 0}));
  EXPECT_EQ(s.features(), (Vector(6) << 0, 1, 1, 1, 0, 0).finished());
  s.clear();
  EXPECT_EQ(s.features(), Vector::Zero(6));
  EXPECT_THROW(s.push(Observation(Bits{1})), ShapeError);
}

TEST(Gae, MatchesHandComputation) {
  RolloutBatch b;
  b.rewards = {1.0, 0.0, 2.0};
  b.values = {0.5, 1.0, 0.0};
  b.dones = {0, 1, 0};
  b.actions = {0, 0, 0};
  compute_gae(b, 4.0, 0.5, 0.5);
  // step 2 bootstraps from 4; step 1 ends an episode; step 0 sees step 1
  const double d2 = 2.0 + 0.5 * 4.0 - 0.0;
  const double d1 = 0.0 - 1.0;
  const double d0 = 1.0 + 0.5 * 1.0 - 0.5;
  EXPECT_DOUBLE_EQ(b.advantages[2], d2);
  EXPECT_DOUBLE_EQ(b.advantages[1], d1);
  EXPECT_DOUBLE_EQ(b.advantages[0], d0 + 0.25 * d1);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(b.returns[t], b.advantages[t] + b.values[t]);
}

TEST(PpoLoss, GradientMatchesFiniteDifferences) {
  PolicyConfig pc;
  pc.k_pi = 2;
  pc.hidden = {5, 4};
  PolicyNet net(3, 3, pc);
  Rng rng(4);
  net.init(rng);
  // undo the small last-layer init so the check sees a non-trivial policy
  net.actor().layers().back().weight.init_uniform(rng, 0.8);
  RolloutBatch b;
  const int n = 16;
  b.obs = Matrix(6, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < 6; ++i) b.obs(i, j) = rng.bernoulli(0.5);
  }
  const Matrix p = nn::softmax_columns(net.logits(b.obs));
  for (int j = 0; j < n; ++j) {
    const int a = rng.uniform_int(3);
    b.actions.push_back(a);
    // ratios well inside or well outside the clip range, away from the kinks
    const double shift = (j % 3 == 0) ? 0.6 : (j % 3 == 1 ? -0.6 : 0.05 * (rng.uniform() - 0.5));
    b.log_probs.push_back(std::log(p(a, j)) + shift);
    b.returns.push_back(rng.uniform() * 2.0 - 1.0);
  }
  std::vector<double> adv(n);
  for (auto& v : adv) v = rng.uniform() * 2.0 - 1.0;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  PpoConfig cfg;
  const auto params = net.parameters();
  const auto res = nn::gradient_check(
      params, [&] { return ppo_loss(net, b, adv, idx, cfg, false).total; },
      [&] {
        nn::zero_grads(params);
        ppo_loss(net, b, adv, idx, cfg, true);
      });
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst_param << "[" << res.worst_index << "]";
  EXPECT_GT(res.checked, 100);
}

TEST(Advantages, NormalizationIgnoresRewardOffset) {
  // single-step episodes: a reward offset shifts every advantage equally
  Rng rng(8);
  RolloutBatch a, b;
  for (int t = 0; t < 50; ++t) {
    const double r = rng.uniform(), v = rng.uniform();
    a.rewards.push_back(r);
    b.rewards.push_back(r + 3.0);
    a.values.push_back(v);
    b.values.push_back(v);
    a.dones.push_back(1);
    b.dones.push_back(1);
    a.actions.push_back(0);
    b.actions.push_back(0);
  }
  compute_gae(a, 0.0, 0.99, 0.95);
  compute_gae(b, 0.0, 0.99, 0.95);
  EXPECT_NE(a.returns, b.returns);
  const auto na = normalized(a.advantages), nb = normalized(b.advantages);
  EXPECT_EQ(argsort(na), argsort(nb));
  for (std::size_t i = 0; i < na.size(); ++i) EXPECT_NEAR(na[i], nb[i], 1e-9);
}

TEST(Evaluate, RejectsZeroEpisodes) {
  Bandit env;
  UniformRandomPolicy pi(2);
  EXPECT_THROW(evaluate(pi, env, 0, 1), ConfigError);
}

TEST(Evaluate, DeterministicPolicyOnDeterministicEnvHasZeroStderr) {
  Bandit env(7);
  ConstantPolicy pi(1);
  const auto r = evaluate(pi, env, 10, 3);
  EXPECT_EQ(r.mean, 7.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(TrainPolicy, ZeroBudgetGivesOnlyInitialEvaluation) {
  Bandit sim, eval;
  auto cfg = small_config();
  cfg.total_steps = 0;
  const auto o = train_policy(sim, eval, cfg, 1);
  ASSERT_EQ(o.curve.points.size(), 1u);
  EXPECT_EQ(o.curve.points[0].env_steps, 0);
  EXPECT_EQ(o.updates, 0);
}

TEST(TrainPolicy, LearnsBanditAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Bandit sim, eval;
    const auto o = train_policy(sim, eval, small_config(), seed);
    ObsStack s = o.policy.make_stack();
    s.push(Observation(Bits{1}));
    EXPECT_EQ(o.policy.greedy(s.features()), 1) << "seed " << seed;
    EXPECT_EQ(o.curve.final_point().mean_return, 10.0) << "seed " << seed;
  }
}

TEST(TrainPolicy, IsDeterministicGivenSeed) {
  Bandit s1, e1, s2, e2, s3, e3;
  auto cfg = small_config();
  cfg.total_steps = 1000;  // not a multiple of the horizon or eval interval
  auto a = train_policy(s1, e1, cfg, 5);
  auto b = train_policy(s2, e2, cfg, 5);
  auto c = train_policy(s3, e3, cfg, 6);
  ASSERT_EQ(a.curve.points.size(), b.curve.points.size());
  EXPECT_EQ(a.curve.points.back().env_steps, 1000);
  for (std::size_t i = 0; i < a.curve.points.size(); ++i) {
    EXPECT_EQ(a.curve.points[i].mean_return, b.curve.points[i].mean_return);
    EXPECT_EQ(a.curve.points[i].wall_clock_s, 0.0);
  }
  const auto pa = a.policy.parameters(), pb = b.policy.parameters(), pc = c.policy.parameters();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    differs |= pa[i]->value != pc[i]->value;
  }
  EXPECT_TRUE(differs);
}

TEST(TrainPolicy, RejectsMismatchedEvaluationSimulator) {
  Bandit sim;
  class Wide : public Bandit {
   public:
    Wide() { d_ = Bandit::descriptor(); d_.obs_width = 2; }
    const EnvDescriptor& descriptor() const override { return d_; }
   private:
    EnvDescriptor d_;
  } eval;
  EXPECT_THROW(train_policy(sim, eval, small_config(), 0), ConfigError);
}

TEST(Curve, CsvRoundTripAndAggregate) {
  LearningCurve c;
  c.points = {{0.0, 0, 1.5, 0.1}, {2.25, 100, 3.0, 0.2}};
  const std::string path = ::testing::TempDir() + "curve.csv";
  c.write_csv(path);
  EXPECT_EQ(slurp(path), "wall_clock_s,env_steps,mean_return,stderr\n0,0,1.5,0.1\n2.25,100,3,0.2\n");
  const auto d = LearningCurve::read_csv(path);
  ASSERT_EQ(d.points.size(), 2u);
  EXPECT_EQ(d.points[1].env_steps, 100);
  EXPECT_EQ(d.points[1].mean_return, 3.0);

  const auto one = AggregateCurve::of({c});
  ASSERT_EQ(one.points.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(one.points[i].wall_clock_s, c.points[i].wall_clock_s);
    EXPECT_EQ(one.points[i].mean_return, c.points[i].mean_return);
    EXPECT_EQ(one.points[i].std_error, c.points[i].std_error);
    EXPECT_EQ(one.points[i].std_across_seeds, 0.0);
  }
  LearningCurve e = c;
  e.points[1].mean_return = 5.0;
  const auto two = AggregateCurve::of({c, e});
  EXPECT_DOUBLE_EQ(two.points[1].mean_return, 4.0);
  EXPECT_DOUBLE_EQ(two.points[1].std_across_seeds, std::sqrt(2.0));

  std::ofstream(path, std::ios::app) << "1,2,oops\n";
  try {
    LearningCurve::read_csv(path);
    FAIL();
  } catch (const IoError& err) {
    EXPECT_NE(std::string(err.what()).find(":4:"), std::string::npos) << err.what();
  }
  std::remove(path.c_str());
}

TEST(Experiment, SeedsCurvesAndAggregate) {
  const std::string dir = ::testing::TempDir() + "experiment";
  auto cfg = small_config();
  cfg.total_steps = 512;
  const SimulatorFactory make = [] { return std::make_unique<Bandit>(); };
  const auto res = run_experiment(make, make, cfg, {3, 3, 4}, {}, dir);
  ASSERT_TRUE(res.all_ok());
  ASSERT_EQ(res.runs.size(), 3u);
  for (const char* f : {"/curve_seed3.csv", "/curve_seed4.csv", "/aggregate.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir + f)) << f;
  }
  for (std::size_t i = 0; i < res.runs[0].curve.points.size(); ++i) {
    EXPECT_EQ(res.runs[0].curve.points[i].mean_return, res.runs[1].curve.points[i].mean_return);
  }
  EXPECT_EQ(res.aggregate.seeds, 3);
  EXPECT_EQ(res.aggregate.points.size(), res.runs[0].curve.points.size());
  std::filesystem::remove_all(dir);
}

TEST(Experiment, FailingSeedIsIsolated) {
  auto cfg = small_config();
  cfg.total_steps = 256;
  int calls = 0;
  const SimulatorFactory make_train = [&calls]() -> std::unique_ptr<Simulator> {
    if (calls++ == 0) throw IoError("simulated failure");
    return std::make_unique<Bandit>();
  };
  const SimulatorFactory make_eval = [] { return std::make_unique<Bandit>(); };
  const auto res = run_experiment(make_train, make_eval, cfg, {1, 2});
  EXPECT_FALSE(res.runs[0].ok);
  EXPECT_NE(res.runs[0].error.find("simulated failure"), std::string::npos);
  EXPECT_TRUE(res.runs[1].ok);
  EXPECT_FALSE(res.all_ok());
  EXPECT_EQ(res.aggregate.seeds, 1);
}

TEST(PolicyCheckpoint, RoundTripAndErrors) {
  PolicyNet p(4, 3, PolicyConfig{2, {6}});
  Rng rng(1);
  p.init(rng);
  const std::string path = ::testing::TempDir() + "policy.json";
  save_policy(p, path);
  auto q = load_policy(path);
  const auto pa = p.parameters(), pb = q.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  EXPECT_EQ(q.config().k_pi, 2);
  std::ofstream(path) << "{\"format\": \"ials-policy\", \"version\": 1,\n \"obs_width\": 4}\n";
  try {
    load_policy(path);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos) << e.what();
  }
  std::remove(path.c_str());
}
