#include <gtest/gtest.h>

#include <array>
#include <deque>

#include "ials/core/rng.hpp"
#include "ials/core/simulator.hpp"
#include "ials/core/types.hpp"
#include "ials/core/window.hpp"

using namespace ials;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, LabeledSplitsDiffer) {
  Rng root(42);
  EXPECT_NE(root.split("env").next_u64(), root.split("policy-init").next_u64());
  EXPECT_NE(root.split("env", 0).next_u64(), root.split("env", 1).next_u64());
}

TEST(Rng, DifferentSeedsDiffer) { EXPECT_NE(Rng(0).next_u64(), Rng(1).next_u64()); }

TEST(Rng, SplitIgnoresDrawCount) {
  Rng a(7), b(7);
  for (int i = 0; i < 10; ++i) b.next_u64();
  EXPECT_EQ(a.split("x").next_u64(), b.split("x").next_u64());
}

TEST(Rng, UniformRangeAndIntBounds) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const int k = r.uniform_int(5);
    ASSERT_GE(k, 0);
    ASSERT_LT(k, 5);
  }
  EXPECT_THROW(r.uniform_int(0), ConfigError);
}

TEST(Rng, CategoricalFrequencies) {
  Rng r(11);
  const std::array<double, 3> w{0.2, 0.0, 0.8};
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 20000; ++i) ++counts[r.categorical(w)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / 20000.0, 0.2, 0.015);
  const std::array<double, 2> zero{0.0, 0.0};
  EXPECT_THROW(r.categorical(zero), NumericError);
}

TEST(BitVector, StringRoundTrip) {
  const auto v = Observation::from_string("010011");
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v[1], 1);
  EXPECT_EQ(v.to_string(), "010011");
  EXPECT_THROW(Observation::from_string("01x"), ConfigError);
}

TEST(Influence, Validation) {
  EXPECT_NO_THROW(validate_influence(InfluenceValue({0, 3}), {2, 4}));
  EXPECT_THROW(validate_influence(InfluenceValue({0, 4}), {2, 4}), ShapeError);
  EXPECT_THROW(validate_influence(InfluenceValue({0}), {2, 4}), ShapeError);
}

namespace {
LocalState ls(int v) { return LocalState(Bits{static_cast<std::uint8_t>(v & 1), static_cast<std::uint8_t>((v >> 1) & 1)}); }
}  // namespace

TEST(Window, AppendOnceFromEmpty) {
  AlshWindow w(3);
  w.reset(ls(0));
  w.append(Action{1}, ls(1));
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(w.current(), ls(1));
}

TEST(Window, FullWindowEvictsOldest) {
  AlshWindow w(3);
  w.reset(ls(0));
  for (int i = 1; i <= 3; ++i) w.append(Action{i}, ls(i));
  w.append(Action{4}, ls(0));
  EXPECT_EQ(w.size(), 3u);
  EXPECT_EQ(w.entries().front().first.index, 2);
  EXPECT_EQ(w.initial(), ls(1));
}

TEST(Window, IdenticalAppends) {
  AlshWindow w(3);
  w.reset(ls(0));
  for (int i = 0; i < 4; ++i) w.append(Action{2}, ls(3));
  EXPECT_EQ(w.size(), 3u);
  for (const auto& e : w.entries()) {
    EXPECT_EQ(e.first.index, 2);
    EXPECT_EQ(e.second, ls(3));
  }
}

TEST(Window, RandomAppendsKeepCapacityAndOrder) {
  Rng r(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto k = static_cast<std::size_t>(1 + r.uniform_int(6));
    AlshWindow w(k);
    w.reset(ls(0));
    std::deque<int> ref;
    const int n = r.uniform_int(20);
    for (int i = 0; i < n; ++i) {
      w.append(Action{i}, ls(i));
      ref.push_back(i);
      if (ref.size() > k) ref.pop_front();
      ASSERT_LE(w.size(), k);
    }
    ASSERT_EQ(w.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(w.entries()[i].first.index, ref[i]);
  }
}

TEST(Window, DSetWindowWidthChecked) {
  DSetWindow w(2);
  w.push(DSetRow::from_string("01"));
  EXPECT_THROW(w.push(DSetRow::from_string("011")), ShapeError);
  w.push(DSetRow::from_string("10"));
  w.push(DSetRow::from_string("11"));
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].to_string(), "10");
}

TEST(Policy, UniformRandomCoversActions) {
  UniformRandomPolicy p(5);
  Rng r(1);
  bool seen[5] = {};
  for (int i = 0; i < 200; ++i) seen[p.act(Observation(), r).index] = true;
  for (bool s : seen) EXPECT_TRUE(s);
}
