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

#include "oracles.hpp"
#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"
#include "qrelay/quantum.hpp"

using namespace qrelay;

TEST(Qubit, LabelsAndPreparation) {
  EXPECT_EQ(prepare_qubit(Basis::X, 0).label(), "+x");
  EXPECT_EQ(prepare_qubit(Basis::X, 1).label(), "-x");
  EXPECT_EQ(prepare_qubit(Basis::Y, 0).label(), "+y");
  EXPECT_EQ(prepare_qubit(Basis::Y, 1).label(), "-y");
  EXPECT_EQ(conjugate(Basis::X), Basis::Y);
}

TEST(Qubit, MeasureInPreparationBasisIsDeterministic) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    for (auto b : {Basis::X, Basis::Y}) {
      for (std::uint8_t bit : {0, 1}) ASSERT_EQ(measure_qubit(prepare_qubit(b, bit), b, rng), bit);
    }
  }
}

TEST(Qubit, ConjugateMeasurementIsUniform) {
  Rng rng(2);
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ones += measure_qubit(prepare_qubit(Basis::X, 0), Basis::Y, rng);
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.01);
}

TEST(Qubit, InterceptResendMatchingBasisIsIdentity) {
  Rng rng(3);
  for (auto b : {Basis::X, Basis::Y}) {
    for (std::uint8_t bit : {0, 1}) {
      const auto r = intercept_resend(prepare_qubit(b, bit), b, rng);
      EXPECT_EQ(r.bit, bit);
      EXPECT_EQ(r.resent, prepare_qubit(b, bit));
    }
  }
}

TEST(Qubit, InterceptConjugateThenMeasureOriginalBasisHalfWrong) {
  // Expected by a two-stage frequency count of ((X,0), Y) then X measurement.
  Rng rng(4);
  const int n = 100000;
  int wrong = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = intercept_resend(prepare_qubit(Basis::X, 0), Basis::Y, rng);
    EXPECT_EQ(r.resent.basis, Basis::Y);
    wrong += measure_qubit(r.resent, Basis::X, rng) != 0;
  }
  const double f = static_cast<double>(wrong) / n;
  EXPECT_GE(f, 0.49);
  EXPECT_LE(f, 0.51);
}

TEST(Qubit, NoiseFlipsAtConfiguredRate) {
  Rng rng(5);
  EXPECT_THROW(NoiseModel::with_flip(-0.1), Error);
  EXPECT_THROW(NoiseModel::with_flip(1.5), Error);
  const auto noise = NoiseModel::with_flip(0.1);
  const int n = 100000;
  int flips = 0;
  for (int i = 0; i < n; ++i) {
    const auto s = apply_noise(prepare_qubit(Basis::Y, 1), noise, rng);
    EXPECT_EQ(s.basis, Basis::Y);
    flips += s.bit != 1;
  }
  EXPECT_NEAR(static_cast<double>(flips) / n, 0.1, 0.005);
}

TEST(Qubit, NoiseConsumesOneDraw) {
  Rng a(6), b(6);
  apply_noise(prepare_qubit(Basis::X, 0), NoiseModel{0.0}, a);
  b.next();
  EXPECT_EQ(a.next(), b.next());
}

TEST(QuantumPhase, ChainValidation) {
  Chain one{{"a"}, {}};
  EXPECT_THROW(one.validate(), Error);
  Chain dup{{"a", "a"}, {}};
  EXPECT_THROW(dup.validate(), Error);
  Chain no_tx{{"a", "b"}, {Capabilities{false, true}, Capabilities{true, true}}};
  try {
    no_tx.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Capability);
  }
  Chain weak_relay{{"a", "c", "b"}, {Capabilities{}, Capabilities{true, false}, Capabilities{}}};
  EXPECT_THROW(weak_relay.validate(), Error);
}

TEST(QuantumPhase, NoiselessRunsAgreeWherePreparedAndMeasuredBasesMatch) {
  const Chain c{{"alice", "carol1", "carol2", "bob"}, {}};
  const auto recs = run_quantum_phase(c, 20000, NoiseModel{}, std::nullopt, Rng(11));
  ASSERT_EQ(recs.size(), 20000u);
  for (const auto& r : recs) {
    for (std::size_t k = 1; k < r.bases.size(); ++k) {
      if (r.bases[k] == r.bases[k - 1]) { ASSERT_EQ(r.bits[k], r.bits[k - 1]); }
    }
  }
}

TEST(QuantumPhase, Deterministic) {
  const Chain c{{"alice", "carol", "bob"}, {}};
  const auto a = run_quantum_phase(c, 500, NoiseModel{0.05}, EveAttack{0, 0.5}, Rng(21));
  const auto b = run_quantum_phase(c, 500, NoiseModel{0.05}, EveAttack{0, 0.5}, Rng(21));
  EXPECT_EQ(a, b);
}

TEST(QuantumPhase, InterleavingMatchesBackToBack) {
  const Chain c1{{"alice", "carol", "bob"}, {}};
  const Chain c2{{"alice", "carol", "dave"}, {}};
  std::vector<HopChannel> hops(2);
  QuantumPhase p1(c1, hops, Rng(1)), p2(c2, hops, Rng(2));
  std::vector<RoundRecord> i1, i2;
  for (int i = 0; i < 300; ++i) {
    i1.push_back(p1.next());
    i2.push_back(p2.next());
  }
  EXPECT_EQ(i1, run_quantum_phase(c1, 300, hops, Rng(1)));
  EXPECT_EQ(i2, run_quantum_phase(c2, 300, hops, Rng(2)));
}

TEST(QuantumPhase, EveOnAliceCarolHopGivesQuarterErrorOnAllSameBasisRounds) {
  const double expected = oracle::eve_single_hop_error();
  ASSERT_DOUBLE_EQ(expected, 0.25);
  const Chain c{{"alice", "carol", "bob"}, {}};
  const auto recs = run_quantum_phase(c, 80000, NoiseModel{}, EveAttack{0, 1.0}, Rng(31));
  std::size_t same = 0, wrong = 0;
  for (const auto& r : recs) {
    if (r.bases[0] == r.bases[1] && r.bases[1] == r.bases[2]) {
      ++same;
      wrong += r.bits[0] != r.bits[2];
    }
  }
  ASSERT_GE(same, 10000u);
  const double f = static_cast<double>(wrong) / static_cast<double>(same);
  EXPECT_GE(f, 0.23);
  EXPECT_LE(f, 0.27);
}

TEST(QuantumPhase, PropertyEveErrorComposesOverHops) {
  // Eve on k hops of a 4-chain: all-same-basis error follows the chained oracle.
  const Chain c{{"a", "c1", "c2", "b"}, {}};
  for (int k = 1; k <= 3; ++k) {
    std::vector<HopChannel> hops(3);
    for (int h = 0; h < k; ++h) hops[static_cast<std::size_t>(h)].eve_fraction = 1.0;
    const auto recs = run_quantum_phase(c, 120000, hops, Rng(40 + static_cast<std::uint64_t>(k)));
    std::size_t same = 0, wrong = 0;
    for (const auto& r : recs) {
      if (r.bases[0] == r.bases[1] && r.bases[1] == r.bases[2] && r.bases[2] == r.bases[3]) {
        ++same;
        wrong += r.bits[0] != r.bits[3];
      }
    }
    EXPECT_NEAR(static_cast<double>(wrong) / static_cast<double>(same), oracle::chained_eve_error(k), 0.02) << k;
  }
}

TEST(QuantumPhase, RejectsBadHopsAndRounds) {
  const Chain c{{"a", "b"}, {}};
  EXPECT_THROW(run_quantum_phase(c, 0, NoiseModel{}, std::nullopt, Rng(1)), Error);
  EXPECT_THROW(run_quantum_phase(c, 5, NoiseModel{}, EveAttack{3, 1.0}, Rng(1)), Error);
  std::vector<HopChannel> bad{{NoiseModel{}, 1.5}};
  EXPECT_THROW(QuantumPhase(c, bad, Rng(1)), Error);
}
