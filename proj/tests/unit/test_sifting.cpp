/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"

using namespace qrelay;

namespace {

std::vector<Basis> pattern(unsigned mask, std::size_t n) {
  std::vector<Basis> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = (mask >> i) & 1u ? Basis::Y : Basis::X;
  return b;
}

std::vector<int> ints(const std::vector<Basis>& b) {
  std::vector<int> v;
  for (auto x : b) v.push_back(x == Basis::Y);
  return v;
}

}  // namespace

TEST(Sifting, ThreeChainCaseTableExhaustive) {
  for (unsigned m = 0; m < 8; ++m) {
    const auto b = pattern(m, 3);
    const RoundGroups g = classify_round(b);
    const auto expect = oracle::three_chain_group(b[0] == Basis::Y, b[1] == Basis::Y, b[2] == Basis::Y);
    switch (expect) {
      case oracle::Group::A_AllSame:
        ASSERT_EQ(g.runs.size(), 1u);
        EXPECT_EQ(g.runs[0].pair, (PositionPair{0, 2}));
        EXPECT_EQ(g.runs[0].interior_count(), 1u);
        break;
      case oracle::Group::B_AliceCarol:
        ASSERT_EQ(g.runs.size(), 1u);
        EXPECT_EQ(g.runs[0].pair, (PositionPair{0, 1}));
        break;
      case oracle::Group::C_CarolBob:
        ASSERT_EQ(g.runs.size(), 1u);
        EXPECT_EQ(g.runs[0].pair, (PositionPair{1, 2}));
        break;
      case oracle::Group::D_Unused:
        EXPECT_TRUE(g.unused()) << "Alice = Bob != Carol cannot be used";
        break;
    }
  }
}

TEST(Sifting, FourChainFourteenOfSixteenUsable) {
  std::size_t usable = 0;
  std::set<PositionPair> pairs;
  for (unsigned m = 0; m < 16; ++m) {
    const auto b = pattern(m, 4);
    const auto g = classify_round(b);
    const auto expect = oracle::runs(ints(b));
    ASSERT_EQ(g.runs.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      EXPECT_EQ(g.runs[i].pair, (PositionPair{expect[i].first, expect[i].second}));
      pairs.insert(g.runs[i].pair);
    }
    usable += g.unused() ? 0 : 1;
  }
  EXPECT_EQ(usable, 14u);
  const std::set<PositionPair> six{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  EXPECT_EQ(pairs, six);
}

TEST(Sifting, PropertyRunsAreDisjointAndMaximal) {
  Rng rng(9);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<Basis> b(n);
    for (auto& x : b) x = rng.bit() ? Basis::Y : Basis::X;
    const auto g = classify_round(b);
    std::vector<int> owner(n, -1);
    for (std::size_t r = 0; r < g.runs.size(); ++r) {
      const auto& p = g.runs[r].pair;
      ASSERT_LT(p.first, p.last);
      for (std::size_t k = p.first; k <= p.last; ++k) {
        ASSERT_EQ(owner[k], -1);
        owner[k] = static_cast<int>(r);
        ASSERT_EQ(b[k], b[p.first]);
      }
      if (p.first > 0) { ASSERT_NE(b[p.first - 1], b[p.first]); }
      if (p.last + 1 < n) { ASSERT_NE(b[p.last + 1], b[p.last]); }
    }
  }
}

TEST(Sifting, StatisticalFourChainFraction) {
  const Chain c{{"alice", "carol1", "carol2", "bob"}, {}};
  const auto recs = run_quantum_phase(c, 100000, NoiseModel{}, std::nullopt, Rng(77));
  const auto a = sift(recs);
  EXPECT_NEAR(a.usable_fraction(), 0.875, 0.01);
  EXPECT_EQ(a.used_rounds() + a.unused_rounds(), recs.size());
  const auto by_pair = a.rounds_by_pair();
  EXPECT_EQ(by_pair.size(), 6u);
  EXPECT_NEAR(static_cast<double>(by_pair.at({0, 3}).size()) / 100000.0, 0.125, 0.01);
}

TEST(Sifting, SiftBasesMatchesSiftOfRecords) {
  const Chain c{{"a", "c", "b"}, {}};
  const auto recs = run_quantum_phase(c, 1000, NoiseModel{}, std::nullopt, Rng(5));
  std::vector<std::vector<Basis>> announced;
  for (const auto& r : recs) announced.push_back(r.bases);
  const auto x = sift(recs);
  const auto y = sift_bases(announced, 3);
  EXPECT_EQ(x.rounds, y.rounds);
}

TEST(Sifting, RejectsEmptyAndRagged) {
  EXPECT_THROW(sift(std::vector<RoundRecord>{}), Error);
  std::vector<std::vector<Basis>> ragged{{Basis::X, Basis::X}, {Basis::X}};
  EXPECT_THROW(sift_bases(ragged, 2), Error);
}
