#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ials/aip/exact_predictor.hpp"
#include "ials/aip/train.hpp"

using namespace ials;
using namespace ials::aip;

namespace {

std::shared_ptr<const exact::ToyDbn> chain_toy(std::uint64_t seed = 3) {
  return std::make_shared<const exact::ToyDbn>(exact::make_chain(6, seed));
}

InfluenceDataset toy_dataset(const std::shared_ptr<const exact::ToyDbn>& d, long n, std::uint64_t seed, int k = 8) {
  exact::ToyGlobalSimulator gs(d);
  UniformRandomPolicy pi(2);
  return collect_dataset(gs, pi, n, k, seed);
}

/// Episodes of random rows with targets computed by `f` from the newest row.
template <class F>
InfluenceDataset synthetic(int episodes, int len, int width, std::vector<int> classes, std::uint64_t seed, F f) {
  InfluenceDataset d;
  d.provenance = {"synthetic", "none", seed, 0, 1, width, classes};
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    for (int t = 0; t < len; ++t) {
      DSetRow row(static_cast<std::size_t>(width));
      for (int i = 0; i < width; ++i) row[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
      InfluenceSample s{{row}, InfluenceValue(f(row, rng)), e, t};
      d.samples.push_back(std::move(s));
    }
  }
  d.provenance.n = static_cast<long>(d.samples.size());
  return d;
}

double tmp_counter = 0;
std::string tmp_path(const std::string& stem) {
  return ::testing::TempDir() + stem + std::to_string(static_cast<int>(tmp_counter++)) + ".json";
}

}  // namespace

TEST(Collect, SingleSample) {
  const auto d = toy_dataset(chain_toy(), 1, 1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.samples[0].window.size(), 1u);
  EXPECT_EQ(d.samples[0].t, 0);
  EXPECT_EQ(d.provenance.env_id, "toy-chain");
}

TEST(Collect, IsDeterministic) {
  const auto toy = chain_toy();
  const auto a = toy_dataset(toy, 80, 9), b = toy_dataset(toy, 80, 9);
  ASSERT_EQ(a.size(), 80u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].window, b.samples[i].window);
    EXPECT_EQ(a.samples[i].target, b.samples[i].target);
  }
  const auto c = toy_dataset(toy, 80, 10);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= !(a.samples[i].target == c.samples[i].target);
  EXPECT_TRUE(differs);
}

TEST(Collect, WindowsAreOrderedAndBounded) {
  const auto d = toy_dataset(chain_toy(), 200, 2, 3);
  const auto eps = d.episodes();
  EXPECT_EQ(eps.size(), 25u);
  for (const auto& s : d.samples) {
    ASSERT_EQ(s.window.size(), static_cast<std::size_t>(std::min(3, s.t + 1)));
    const auto& e = eps[static_cast<std::size_t>(s.episode)];
    for (std::size_t r = 0; r < s.window.size(); ++r) {
      ASSERT_EQ(s.window[r], e.rows[static_cast<std::size_t>(s.t + 1 - static_cast<int>(s.window.size()) + static_cast<int>(r))]);
    }
  }
}

TEST(Collect, MarginalMatchesIndependentRollouts) {
  const auto toy = chain_toy(5);
  const auto d = toy_dataset(toy, 40000, 11);
  const double p_data = d.head_marginals()[0][1];
  exact::ToyGlobalSimulator gs(toy);
  Rng rng(12345);
  long ones = 0, n = 0;
  for (int ep = 0; ep < 5000; ++ep) {
    gs.reset(rng.next_u64());
    for (int t = 0; t < 8; ++t) {
      gs.step(Action{rng.uniform_int(2)});
      ones += gs.last_influence()[0];
      ++n;
    }
  }
  EXPECT_NEAR(p_data, static_cast<double>(ones) / static_cast<double>(n), 0.02);
}

TEST(Dataset, JsonlRoundTripAndErrors) {
  const auto d = toy_dataset(chain_toy(), 30, 4, 4);
  const auto path = tmp_path("dataset");
  d.save_jsonl(path);
  const auto e = InfluenceDataset::load_jsonl(path);
  ASSERT_EQ(e.size(), d.size());
  EXPECT_EQ(e.provenance.k, 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(e.samples[i].window, d.samples[i].window);
    EXPECT_EQ(e.samples[i].target, d.samples[i].target);
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"episode\": 99, \"t\": 0, \"window\": [\"01x\"], \"target\": [0]}\n";
  }
  try {
    InfluenceDataset::load_jsonl(path);
    FAIL() << "corrupted dataset accepted";
  } catch (const IoError& err) {
    EXPECT_NE(std::string(err.what()).find(":32:"), std::string::npos) << err.what();
  }
  EXPECT_THROW(InfluenceDataset::load_jsonl(path + ".missing"), IoError);
  std::remove(path.c_str());
}

TEST(FixedMarginal, IsEmpiricalFrequency) {
  const auto d = toy_dataset(chain_toy(), 10000, 6);
  long ones = 0;
  for (const auto& s : d.samples) ones += s.target[0];
  const auto p = FixedMarginalPredictor::from_dataset(d);
  EXPECT_EQ(p.marginals()[0](1), static_cast<double>(ones) / 10000.0);
  EXPECT_EQ(p.marginals()[0](0), static_cast<double>(10000 - ones) / 10000.0);
}

TEST(FixedMarginal, IgnoresWindow) {
  FixedMarginalPredictor p({"x", 3, {2}}, {{0.1, 0.9}});
  for (const char* s : {"000", "111", "010"}) {
    const std::vector<DSetRow> w{DSetRow::from_string(s)};
    const auto probs = p.predict(w);
    EXPECT_EQ(probs[0](0), 0.1);
    EXPECT_EQ(probs[0](1), 0.9);
  }
  EXPECT_THROW(FixedMarginalPredictor({"x", 3, {2}}, {{0.2, 0.9}}), ConfigError);
  const std::vector<DSetRow> bad{DSetRow::from_string("01")};
  EXPECT_THROW(p.predict(bad), ShapeError);
}

TEST(Sampling, OneHotAlwaysPicksItsClass) {
  HeadProbs probs{Vector::Unit(4, 2), Vector::Unit(2, 0)};
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto u = sample_influence(probs, rng);
    ASSERT_EQ(u[0], 2);
    ASSERT_EQ(u[1], 0);
  }
}

TEST(Sampling, FairCoinFrequency) {
  HeadProbs probs{Vector::Constant(2, 0.5)};
  Rng rng(2);
  int zeros = 0;
  for (int i = 0; i < 10000; ++i) zeros += sample_influence(probs, rng)[0] == 0;
  EXPECT_GE(zeros, 4800);
  EXPECT_LE(zeros, 5200);
}

TEST(Sampling, SameSeedSameSequence) {
  HeadProbs probs{(Vector(3) << 0.2, 0.3, 0.5).finished()};
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sample_influence(probs, a), sample_influence(probs, b));
}

TEST(NetPredictor, PredictIsPure) {
  const PredictorInterface iface{"x", 5, {2, 3}};
  NetConfig cfg;
  cfg.gru_hidden = 6;
  for (auto mode : {RecurrentMode::stream, RecurrentMode::window}) {
    cfg.mode = mode;
    const auto p = NetPredictor::untrained(iface, cfg, 7);
    const std::vector<DSetRow> w{DSetRow::from_string("10101"), DSetRow::from_string("01100")};
    const auto a = p.predict(w), b = p.predict(w);
    for (std::size_t m = 0; m < a.size(); ++m) {
      EXPECT_EQ(a[m], b[m]);
      EXPECT_NEAR(a[m].sum(), 1.0, 1e-12);
    }
  }
}

TEST(NetPredictor, SessionMatchesBatchedEvaluation) {
  const auto d = toy_dataset(chain_toy(), 400, 8);
  const auto eps = d.episodes();
  const PredictorInterface iface{d.provenance.env_id, d.provenance.dset_width, d.provenance.influence_classes};
  std::vector<NetConfig> cfgs(4);
  cfgs[0].arch = Arch::ff;
  cfgs[0].k = 3;
  cfgs[0].ff_hidden = {8, 8};
  cfgs[1].mode = RecurrentMode::stream;
  cfgs[2].mode = RecurrentMode::window;
  cfgs[2].k = 3;
  cfgs[3].arch = Arch::ff;
  cfgs[3].k = 1;
  cfgs[3].ff_hidden = {5};
  for (const auto& cfg : cfgs) {
    const auto p = NetPredictor::untrained(iface, cfg, 3);
    const double batched = p.mean_cross_entropy(eps);
    const double stepped = p.InfluencePredictor::mean_cross_entropy(eps);
    EXPECT_NEAR(batched, stepped, 1e-10);
  }
}

TEST(NetPredictor, CheckpointRoundTrip) {
  const auto d = toy_dataset(chain_toy(), 100, 8);
  const PredictorInterface iface{d.provenance.env_id, d.provenance.dset_width, d.provenance.influence_classes};
  NetConfig cfg;
  cfg.gru_hidden = 4;
  const auto p = NetPredictor::untrained(iface, cfg, 3);
  const auto path = tmp_path("pred");
  save_predictor(p, path);
  const auto q = load_predictor(path);
  EXPECT_EQ(q->variant(), Variant::untrained);
  EXPECT_EQ(q->interface().fingerprint(), iface.fingerprint());
  EXPECT_EQ(q->mean_cross_entropy(d.episodes()), p.mean_cross_entropy(d.episodes()));

  auto j = nn::read_json_file(path);
  j["fingerprint"] = 1;
  nn::write_json_file(path, j);
  EXPECT_THROW(load_predictor(path), IoError);
  {
    std::ofstream out(path);
    out << "{\n \"format\": \"ials-predictor\",\n oops\n}";
  }
  try {
    load_predictor(path);
    FAIL() << "corrupted checkpoint accepted";
  } catch (const IoError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(path), std::string::npos);
    EXPECT_NE(what.find("line 3"), std::string::npos) << what;
  }
  std::remove(path.c_str());
}

TEST(NetPredictor, InterfaceMismatchIsRejected) {
  const PredictorInterface iface{"warehouse", 24, {4, 4, 4, 4}};
  EnvDescriptor e;
  e.env_id = "warehouse-fixed8";
  e.dset_width = 24;
  e.influence_classes.assign(12, 2);
  EXPECT_THROW(iface.require_matches(e), ConfigError);
}

TEST(Train, DeterministicTargetIsLearned) {
  auto f = [](const DSetRow& r, Rng&) {
    return std::vector<int>{r[0] && r[1], r[2] + r[3]};
  };
  const auto d = synthetic(200, 50, 6, {2, 3}, 1, f);
  NetConfig cfg;
  cfg.arch = Arch::ff;
  cfg.k = 1;
  cfg.ff_hidden = {32, 32};
  TrainConfig tc;
  tc.max_epochs = 60;
  tc.lr = 3e-3;
  const auto [p, rep] = train_predictor(d, cfg, tc);
  EXPECT_LT(rep.best_val_ce, 0.05);
  EXPECT_LE(rep.final_train_ce, rep.initial_train_ce);
}

TEST(Train, IndependentTargetConvergesToEntropy) {
  auto f = [](const DSetRow&, Rng& rng) { return std::vector<int>{rng.bernoulli(0.3) ? 1 : 0}; };
  const auto d = synthetic(500, 100, 4, {2}, 2, f);
  const double h = -(0.3 * std::log(0.3) + 0.7 * std::log(0.7));
  for (Arch arch : {Arch::ff, Arch::gru}) {
    NetConfig cfg;
    cfg.arch = arch;
    cfg.k = 2;
    cfg.ff_hidden = {16};
    cfg.gru_hidden = 8;
    TrainConfig tc;
    tc.max_epochs = 20;
    tc.batch = arch == Arch::gru ? 16 : 128;
    const auto [p, rep] = train_predictor(d, cfg, tc);
    EXPECT_NEAR(rep.best_val_ce, h, 0.02) << (arch == Arch::ff ? "ff" : "gru");
  }
}

TEST(Train, EmptyDatasetRejected) {
  InfluenceDataset d;
  d.provenance = {"x", "none", 0, 0, 1, 2, {2}};
  EXPECT_THROW(train_predictor(d, NetConfig{}, TrainConfig{}), ConfigError);
}

TEST(ExactOracle, NeedsAFullLocalDSet) {
  auto split = std::make_shared<const exact::ToyDbn>(exact::make_split(6, 1, false));
  EXPECT_THROW(ExactOraclePredictor{split}, ConfigError);
  EXPECT_NO_THROW(ExactOraclePredictor{chain_toy()});
}

TEST(ExactOracle, MatchesFilterOnSampledHistories) {
  const auto toy = chain_toy(4);
  const ExactOraclePredictor oracle(toy);
  exact::ToyGlobalSimulator gs(toy);
  Rng rng(4);
  for (int ep = 0; ep < 20; ++ep) {
    gs.reset(rng.next_u64());
    std::vector<DSetRow> rows{gs.dset_row()};
    exact::ToyHistory h;
    h.xs.push_back(toy->local_index(gs.state()));
    for (int t = 0; t < 8; ++t) {
      const auto want = exact::exact_influence(*toy, h);
      const auto got = oracle.predict(rows);
      ASSERT_NEAR(got[0](1), want[1], 1e-12);
      const int a = rng.uniform_int(2);
      gs.step(Action{a});
      rows.push_back(gs.dset_row());
      h.append(a, toy->local_index(gs.state()));
    }
  }
}

TEST(ExactOracle, CheckpointRoundTrip) {
  const ExactOraclePredictor oracle(chain_toy(2));
  const auto path = tmp_path("oracle");
  save_predictor(oracle, path);
  const auto q = load_any_predictor(path);
  EXPECT_EQ(q->variant(), Variant::exact_oracle);
  const auto d = toy_dataset(chain_toy(2), 200, 1);
  EXPECT_EQ(q->mean_cross_entropy(d.episodes()), oracle.mean_cross_entropy(d.episodes()));
  std::remove(path.c_str());
}

TEST(Train, ToyGruApproachesOracleFloor) {
  const auto toy = chain_toy(7);
  const auto train = toy_dataset(toy, 10000, 21);
  const auto test = toy_dataset(toy, 10000, 22);
  NetConfig cfg;
  cfg.gru_hidden = 16;
  TrainConfig tc;
  tc.batch = 32;
  tc.lr = 3e-3;
  tc.max_epochs = 60;
  const auto [p, rep] = train_predictor(train, cfg, tc);
  const ExactOraclePredictor oracle(toy);
  const double ce_oracle = evaluate_ce(oracle, test);
  const double ce_trained = evaluate_ce(p, test);
  EXPECT_LT(ce_trained - ce_oracle, 0.05);
  EXPECT_GT(ce_trained - ce_oracle, -0.02);
}

TEST(Train, ToyGruIsCloseToOracleInTotalVariation) {
  const auto toy = chain_toy(7);
  const auto train = toy_dataset(toy, 50000, 23);
  const auto test = toy_dataset(toy, 10000, 24);
  NetConfig cfg;
  cfg.gru_hidden = 8;
  TrainConfig tc;
  tc.batch = 32;
  tc.lr = 3e-3;
  tc.max_epochs = 60;
  const auto [p, rep] = train_predictor(train, cfg, tc);
  const ExactOraclePredictor oracle(toy);

  // average total-variation distance to the oracle on on-policy windows
  const auto eps = test.episodes();
  auto s = p.session();
  auto so = oracle.session();
  double tv = 0.0;
  long n = 0;
  for (const auto& e : eps) {
    for (std::size_t t = 0; t < e.rows.size(); ++t) {
      if (t == 0) {
        s->reset(e.rows[0]);
        so->reset(e.rows[0]);
      } else {
        s->push(e.rows[t]);
        so->push(e.rows[t]);
      }
      tv += std::abs(s->probabilities()[0](1) - so->probabilities()[0](1));
      ++n;
    }
  }
  EXPECT_LT(tv / static_cast<double>(n), 0.05);
}
