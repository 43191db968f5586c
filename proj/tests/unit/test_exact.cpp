#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ials/exact/checks.hpp"

using namespace ials;
using namespace ials::exact;

namespace {

ToyDbn deterministic_chain() {
  ToyDbn d = make_chain(5, 1);
  for (auto& c : d.cpts) {
    for (std::size_t i = 0; i < c.p_one.size(); ++i) c.p_one[i] = (i % 3 == 0) ? 1.0 : 0.0;
  }
  for (auto& p : d.prior_one) p = 1.0;
  d.finalize();
  return d;
}

}  // namespace

TEST(ToyDbn, TransitionRowsAreDistributions) {
  const auto d = make_chain(6, 3);
  for (int a = 0; a < d.num_actions; ++a) {
    for (int s = 0; s < d.num_states(); ++s) {
      double z = 0.0;
      for (int s2 = 0; s2 < d.num_states(); ++s2) z += d.transition(a, s, s2);
      ASSERT_NEAR(z, 1.0, 1e-12);
    }
  }
  double zp = 0.0;
  for (int s = 0; s < d.num_states(); ++s) zp += d.prior(s);
  EXPECT_NEAR(zp, 1.0, 1e-12);
}

TEST(ToyDbn, RejectsHiddenParentOfLocalCell) {
  auto d = make_chain(6, 3);
  d.cpts[1].parents = {0, 1, 3};
  EXPECT_THROW(d.finalize(), ConfigError);
}

TEST(ToyDbn, DescriptorRoundTrip) {
  const auto d = make_split(6, 4, false);
  const auto e = ToyDbn::from_json(json::parse(d.to_json().dump()));
  EXPECT_EQ(e.to_json(), d.to_json());
  for (int s = 0; s < d.num_states(); ++s) EXPECT_EQ(d.transition(1, 5, s), e.transition(1, 5, s));
}

TEST(Filter, InitialHistoryIsConditionedPrior) {
  const auto d = make_chain(6, 5);
  ToyHistory h{{2}, {}};
  const auto b = filter_belief(d, h);
  double z = 0.0;
  for (int s = 0; s < d.num_states(); ++s) z += d.local_index(s) == 2 ? d.prior(s) : 0.0;
  for (int s = 0; s < d.num_states(); ++s) {
    EXPECT_NEAR(b[static_cast<std::size_t>(s)], d.local_index(s) == 2 ? d.prior(s) / z : 0.0, 1e-15);
  }
}

TEST(Filter, DeterministicModelGivesPointMass) {
  const auto d = deterministic_chain();
  ToyGlobalSimulator gs(std::make_shared<ToyDbn>(d));
  gs.reset(1);
  ToyHistory h{{d.local_index(gs.state())}, {}};
  for (int t = 0; t < 4; ++t) {
    gs.step(Action{t % 2});
    h.append(t % 2, d.local_index(gs.state()));
  }
  const auto b = filter_belief(d, h);
  EXPECT_EQ(b[static_cast<std::size_t>(gs.state())], 1.0);
}

TEST(Filter, ZeroLikelihoodHistoryThrows) {
  const auto d = deterministic_chain();
  ToyGlobalSimulator gs(std::make_shared<ToyDbn>(d));
  gs.reset(1);
  const int x0 = d.local_index(gs.state());
  gs.step(Action{0});
  const int x1 = d.local_index(gs.state());
  ToyHistory h{{x0, (x1 + 1) % d.num_local_states()}, {0}};
  EXPECT_THROW(filter_belief(d, h), ZeroLikelihoodError);
}

TEST(Filter, MatchesExhaustivePathEnumeration) {
  const auto d = make_chain(6, 6);
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = sample_history(d, 3, rng);
    const int n = d.num_states();
    std::vector<double> ref(static_cast<std::size_t>(n), 0.0);
    // sum over all joint trajectories s0..s3 consistent with the local history
    for (int s0 = 0; s0 < n; ++s0) {
      if (d.local_index(s0) != h.xs[0]) continue;
      for (int s1 = 0; s1 < n; ++s1) {
        if (d.local_index(s1) != h.xs[1]) continue;
        const double p01 = d.prior(s0) * d.transition(h.actions[0], s0, s1);
        for (int s2 = 0; s2 < n; ++s2) {
          if (d.local_index(s2) != h.xs[2]) continue;
          const double p012 = p01 * d.transition(h.actions[1], s1, s2);
          for (int s3 = 0; s3 < n; ++s3) {
            if (d.local_index(s3) != h.xs[3]) continue;
            ref[static_cast<std::size_t>(s3)] += p012 * d.transition(h.actions[2], s2, s3);
          }
        }
      }
    }
    double z = 0.0;
    for (double v : ref) z += v;
    const auto b = filter_belief(d, h);
    double drift = 0.0;
    for (int s = 0; s < n; ++s) {
      EXPECT_NEAR(b[static_cast<std::size_t>(s)], ref[static_cast<std::size_t>(s)] / z, 1e-10);
      drift += b[static_cast<std::size_t>(s)];
    }
    EXPECT_NEAR(drift, 1.0, 1e-10);
  }
}

TEST(Influence, ConstantSourceIgnoresHistory) {
  auto d = make_chain(6, 7);
  d.cpts[2].parents = {};
  d.cpts[2].p_one = {0.3};
  d.prior_one[2] = 0.3;
  d.finalize();
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const auto iu = exact_influence(d, sample_history(d, rng.uniform_int(5), rng));
    EXPECT_NEAR(iu[1], 0.3, 1e-12);
  }
}

TEST(Influence, DeterministicChainIsOneHot) {
  const auto d = deterministic_chain();
  Rng rng(8);
  const auto iu = exact_influence(d, sample_history(d, 3, rng));
  EXPECT_TRUE(iu[0] == 1.0 || iu[1] == 1.0);
}

TEST(Influence, MatchesRejectionSampling) {
  const auto d = make_chain(6, 9);
  auto shared = std::make_shared<ToyDbn>(d);
  ToyGlobalSimulator gs(shared);
  Rng rng(9);
  // key: (x0, a0, x1) -> counts of u_1
  std::map<std::array<int, 3>, std::array<double, 2>> counts;
  for (int n = 0; n < 1000000; ++n) {
    gs.reset(rng.next_u64());
    const int x0 = d.local_index(gs.state());
    const int a = rng.uniform_int(2);
    gs.step(Action{a});
    counts[{x0, a, d.local_index(gs.state())}][static_cast<std::size_t>(d.u_value(gs.state()))] += 1.0;
  }
  int checked = 0;
  for (const auto& [key, c] : counts) {
    const double total = c[0] + c[1];
    if (total < 10000) continue;
    const auto iu = exact_influence(d, ToyHistory{{key[0], key[2]}, {key[1]}});
    EXPECT_NEAR(c[1] / total, iu[1], 0.01);
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(Transition, InfluenceRouteEqualsBeliefRoute) {
  const auto d = make_chain(6, 10);
  const auto rep = check_eq1_eq2(d, 100, 6, 10);
  EXPECT_EQ(rep.histories, 100);
  EXPECT_LT(rep.max_abs_diff, 1e-10);
}

TEST(Transition, DeterministicModelIsPointMass) {
  const auto d = deterministic_chain();
  Rng rng(11);
  const auto p = ialm_transition(d, sample_history(d, 2, rng), 1);
  EXPECT_EQ(*std::max_element(p.begin(), p.end()), 1.0);
}

TEST(Transition, SourceFreeDynamicsEqualLocalCpt) {
  auto d = make_chain(6, 12);
  d.cpts[1].parents = {0, 1};
  d.cpts[1].p_one.resize(d.cpts[1].table_size(2));
  d.finalize();
  Rng rng(12);
  const auto h = sample_history(d, 3, rng);
  const auto p = ialm_transition(d, h, 0);
  for (int x2 = 0; x2 < d.num_local_states(); ++x2) {
    EXPECT_NEAR(p[static_cast<std::size_t>(x2)], d.local_transition(x2, h.current(), 0, 0), 1e-12);
  }
}

TEST(DSeparation, RevealingHiddenCellsDoesNotChangeLocalTransition) {
  // P(x' | belief restricted to a (u, y) assignment) equals T(x' | x, u, a)
  const auto d = make_chain(6, 13);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = sample_history(d, 1 + rng.uniform_int(4), rng);
    const auto b = filter_belief(d, h);
    for (int s = 0; s < d.num_states(); ++s) {
      if (b[static_cast<std::size_t>(s)] <= 0.0) continue;
      for (int a = 0; a < 2; ++a) {
        std::vector<double> p(static_cast<std::size_t>(d.num_local_states()), 0.0);
        for (int s2 = 0; s2 < d.num_states(); ++s2) p[static_cast<std::size_t>(d.local_index(s2))] += d.transition(a, s, s2);
        for (int x2 = 0; x2 < d.num_local_states(); ++x2) {
          ASSERT_NEAR(p[static_cast<std::size_t>(x2)], d.local_transition(x2, h.current(), d.u_value(s), a), 1e-12);
        }
      }
    }
  }
}

TEST(Kl, Basics) {
  EXPECT_EQ(kl_categorical({0.3, 0.7}, {0.3, 0.7}), 0.0);
  EXPECT_NEAR(kl_categorical({0.5, 0.5}, {0.25, 0.75}), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(kl_categorical({0.5, 0.5}, {0.25, 0.75}), 0.1438, 1e-4);
  EXPECT_EQ(kl_categorical({0.0, 1.0}, {0.5, 0.5}), std::log(2.0));
  EXPECT_THROW(kl_categorical({0.5, 0.5}, {1.0, 0.0}), ZeroLikelihoodError);
}

TEST(Kl, NonNegativeSweep) {
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(5), q(5);
    double zp = 0.0, zq = 0.0;
    for (int j = 0; j < 5; ++j) {
      p[static_cast<std::size_t>(j)] = rng.uniform();
      q[static_cast<std::size_t>(j)] = rng.uniform() + 1e-3;
      zp += p[static_cast<std::size_t>(j)];
      zq += q[static_cast<std::size_t>(j)];
    }
    for (auto& v : p) v /= zp;
    for (auto& v : q) v /= zq;
    ASSERT_GE(kl_categorical(p, q), 0.0);
  }
}

TEST(FiniteMemory, WindowedInfluenceIsSufficient) {
  const auto d = make_finite_memory(6, 15);
  for (int k : {1, 2}) {
    const auto r = check_theorem1(d, k, 5);
    EXPECT_TRUE(r.applicable) << "k=" << k << " spread " << r.precondition_spread;
    EXPECT_LE(r.max_q_diff, 1e-8) << "k=" << k;
    EXPECT_TRUE(r.greedy_agree) << "k=" << k;
  }
}

TEST(FiniteMemory, FullWindowIsTriviallyExact) {
  const auto r = check_theorem1(make_chain(6, 16), 5, 5);
  EXPECT_TRUE(r.applicable);
  EXPECT_LE(r.max_q_diff, 1e-10);
}

TEST(FiniteMemory, ViolatingInstanceIsReportedInapplicable) {
  const auto r = check_theorem1(make_chain(6, 17), 1, 5);
  EXPECT_FALSE(r.applicable);
  RecordProperty("chain_k1_q_gap", std::to_string(r.max_q_diff));
}

TEST(PolicyShift, IdenticalPoliciesHaveZeroKl) {
  const auto d = make_split(6, 18, false);
  const auto r = check_prop3_and_cor4(d, {5}, {5}, 3);
  EXPECT_EQ(r.kl_lu, 0.0);
  EXPECT_EQ(r.kl_du, 0.0);
}

TEST(PolicyShift, DSetKlNeverExceedsHistoryKl) {
  const auto d = make_split(6, 19, false);
  Rng rng(19);
  for (int i = 0; i < 20; ++i) {
    const auto r = check_prop3_and_cor4(d, {rng.next_u64()}, {rng.next_u64()}, 4);
    EXPECT_TRUE(r.inequality_holds()) << r.kl_du << " > " << r.kl_lu;
    EXPECT_GT(r.kl_lu, 0.0);
    EXPECT_LT(r.chain_rule_residual, 1e-9);
    EXPECT_LT(r.dsets, r.histories);
  }
}

TEST(PolicyShift, ExogenousDSetIsPolicyInvariant) {
  const auto d = make_split(6, 20, true);
  Rng rng(20);
  for (int i = 0; i < 5; ++i) {
    const auto r = check_prop3_and_cor4(d, {rng.next_u64()}, {rng.next_u64()}, 4);
    EXPECT_LT(std::abs(r.kl_du), 1e-12);
    EXPECT_GT(r.kl_lu, 1e-6);
  }
}

TEST(ToySimulators, ReplayIsDeterministic) {
  auto d = std::make_shared<ToyDbn>(make_chain(8, 21));
  ToyGlobalSimulator a(d), b(d);
  a.reset(99);
  b.reset(99);
  for (int t = 0; t < d->episode_length; ++t) {
    const auto ra = a.step(Action{t % 2});
    const auto rb = b.step(Action{t % 2});
    ASSERT_EQ(ra.observation, rb.observation);
    ASSERT_EQ(ra.reward, rb.reward);
    ASSERT_EQ(a.state(), b.state());
  }
  EXPECT_THROW(a.step(Action{0}), StateError);
}

TEST(ToySimulators, LocalReplayOfRealizedInfluence) {
  auto d = std::make_shared<ToyDbn>(make_chain(8, 22));
  Rng rng(22);
  for (int ep = 0; ep < 50; ++ep) {
    const auto seed = rng.next_u64();
    ToyGlobalSimulator gs(d);
    ToyLocalSimulator ls(d);
    ASSERT_EQ(gs.reset(seed), ls.reset(seed));
    for (int t = 0; t < d->episode_length; ++t) {
      const Action a{rng.uniform_int(2)};
      const auto rg = gs.step(a);
      const auto rl = ls.step(a, gs.last_influence());
      ASSERT_EQ(rg.observation, rl.observation);
      ASSERT_EQ(rg.reward, rl.reward);
      ASSERT_EQ(gs.dset_row(), ls.dset_row());
    }
  }
}
