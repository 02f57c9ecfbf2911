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

#include "qrelay/error.hpp"
#include "qrelay/netsim.hpp"

using namespace qrelay;

namespace {

NodeConfig endpoint(const char* id, const char* carol) {
  NodeConfig n;
  n.id = id;
  n.role = NodeRole::Endpoint;
  n.attachments = {carol};
  return n;
}

NodeConfig relay(const char* id) {
  NodeConfig n;
  n.id = id;
  n.role = NodeRole::Relay;
  return n;
}

NetworkConfig four_chain(std::uint64_t seed = 1) {
  NetworkConfig c;
  c.seed = seed;
  c.nodes = {endpoint("alice", "carol1"), relay("carol1"), relay("carol2"), endpoint("bob", "carol2")};
  return c;
}

SessionSpec spec(std::size_t rounds = 20000) {
  SessionSpec s;
  s.alice = "alice";
  s.bob = "bob";
  s.rounds = rounds;
  return s;
}

bool has_location(const std::vector<Violation>& v, const std::string& loc) {
  for (const auto& x : v)
    if (x.location == loc) return true;
  return false;
}

}  // namespace

TEST(Network, BuildsStarOfStarsWithMesh) {
  NetworkConfig c = four_chain();
  c.nodes.push_back(relay("carol3"));
  const Network n = Network::build(c);
  // Two star edges plus the three-Carol mesh.
  EXPECT_EQ(n.link_count(LinkKind::Quantum), 5u);
  EXPECT_EQ(n.link_count(LinkKind::Classical), 5u);
  EXPECT_NE(n.link("carol3", "carol1", LinkKind::Quantum), nullptr);
  EXPECT_EQ(n.link("alice", "bob", LinkKind::Quantum), nullptr);
  EXPECT_TRUE(n.control().converged());
  EXPECT_EQ(n.auth().pools.view("alice", "carol1").bits().size(), c.initial_pool_bits);
  EXPECT_FALSE(n.auth().pools.has("alice", "bob"));
  EXPECT_GT(n.setup_transcript().size(), 0u);
}

TEST(Network, ValidationListsEveryProblem) {
  NetworkConfig c = four_chain();
  c.nodes.push_back(endpoint("dave", "carol9"));
  c.nodes.push_back(endpoint("alice", "carol1"));
  c.default_noise = 1.5;
  c.link_noise.push_back({NodePair::of("alice", "bob"), 0.1});
  const auto v = validate_network(c);
  EXPECT_TRUE(has_location(v, "/network/nodes/4/attach"));
  EXPECT_TRUE(has_location(v, "/network/nodes/5/id"));
  EXPECT_TRUE(has_location(v, "/links/default_noise"));
  EXPECT_TRUE(has_location(v, "/links/quantum/0/between"));
  try {
    Network::build(c);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.violations().size(), v.size());
  }
}

TEST(Network, EndpointWithoutHardwareRejected) {
  NetworkConfig c = four_chain();
  c.nodes[0].capabilities = Capabilities{false, false};
  EXPECT_FALSE(validate_network(c).empty());
}

TEST(Session, FourChainSucceedsWithSixPairs) {
  Network n = Network::build(four_chain(3));
  const auto r = run_session(n, spec());
  ASSERT_TRUE(r.success) << r.failure_detail;
  EXPECT_EQ(r.pairs.size(), 6u);
  EXPECT_EQ(r.route.nodes, (std::vector<NodeId>{"alice", "carol1", "carol2", "bob"}));
  EXPECT_EQ(r.used_rounds + r.unused_rounds, 20000u);
  EXPECT_NEAR(static_cast<double>(r.used_rounds) / 20000.0, 0.875, 0.02);
  EXPECT_FALSE(r.secret_key.empty());
  ASSERT_TRUE(r.route_check.has_value());
  EXPECT_TRUE(r.route_check->ok);
  EXPECT_EQ(r.forgeries_accepted, 0u);
  for (const auto& p : n.auth().pools.pairs()) EXPECT_TRUE(n.auth().pools.symmetric(p)) << p.label();
}

TEST(Session, PropertyAccountingConservedPerPair) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    NetworkConfig c = four_chain(seed);
    c.default_noise = 0.01 * static_cast<double>(seed - 1);
    Network n = Network::build(c);
    const auto r = run_session(n, spec(15000));
    std::size_t grouped = 0;
    for (const auto& [pair, count] : r.group_counts) grouped += count;
    for (const auto& p : r.pairs) {
      const auto& a = p.accounting;
      ASSERT_EQ(a.raw_bits, p.rounds);
      ASSERT_EQ(a.raw_bits, a.estimation_disclosed + a.reconciliation_input);
      if (p.outcome == PairOutcome::Ok) { ASSERT_EQ(a.final_bits, a.amplification_input - a.compression); }
    }
    // Every usable round yields one raw bit per run it contains.
    std::size_t raw = 0;
    for (const auto& p : r.pairs) raw += p.rounds;
    ASSERT_EQ(raw, grouped);
  }
}

TEST(Session, DeterministicForSeed) {
  Network a = Network::build(four_chain(9));
  Network b = Network::build(four_chain(9));
  const auto ra = run_session(a, spec(8000));
  const auto rb = run_session(b, spec(8000));
  EXPECT_EQ(ra.transcript.lines(), rb.transcript.lines());
  EXPECT_EQ(ra.secret_key, rb.secret_key);
  Network c = Network::build(four_chain(10));
  EXPECT_NE(run_session(c, spec(8000)).secret_key, ra.secret_key);
}

TEST(Session, EveStaysOnHerLink) {
  NetworkConfig c = four_chain(5);
  AdversaryModel eve;
  eve.kind = AdversaryKind::EveInterceptResend;
  eve.link = NodePair::of("carol1", "carol2");
  c.adversaries.push_back(eve);
  Network n = Network::build(c);
  auto s = spec(60000);
  s.qber_threshold = 0.5;
  const auto r = run_session(n, s);
  for (const auto& p : r.pairs) {
    const bool crosses = p.positions.first <= 1 && p.positions.last >= 2;
    if (crosses) {
      EXPECT_NEAR(p.sifted_qber, 0.25, 0.03) << p.pair.label();
    } else {
      EXPECT_EQ(p.sifted_qber, 0.0) << p.pair.label() << " must not see Eve on another link";
    }
  }
}

TEST(Session, FullEveAbortsOnQber) {
  NetworkConfig c = four_chain(6);
  c.adversaries.push_back({AdversaryKind::EveInterceptResend, NodePair::of("carol1", "carol2"), 1.0, {}, 1});
  Network n = Network::build(c);
  const auto r = run_session(n, spec(40000));
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.failure, FailureKind::QberAbort);
}

TEST(Session, DetourIsCaughtByRouteCheck) {
  NetworkConfig c = four_chain(7);
  c.nodes.push_back(relay("carol3"));
  Network n = Network::build(c);
  auto s = spec(10000);
  s.faults.detour_after = "carol1";
  s.faults.detour_via = "carol3";
  const auto r = run_session(n, s);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.failure, FailureKind::RouteMismatch);
  ASSERT_TRUE(r.route_check.has_value());
  EXPECT_EQ(r.route_check->extra, (std::vector<NodeId>{"carol3"}));
  EXPECT_EQ(r.physical, (std::vector<NodeId>{"alice", "carol1", "carol3", "carol2", "bob"}));
}

TEST(Session, SilentRelayIsMissing) {
  Network n = Network::build(four_chain(8));
  auto s = spec(10000);
  s.faults.silent_relay = "carol2";
  const auto r = run_session(n, s);
  EXPECT_EQ(r.failure, FailureKind::RouteMismatch);
  ASSERT_TRUE(r.route_check.has_value());
  EXPECT_EQ(r.route_check->missing, (std::vector<NodeId>{"carol2"}));
}

TEST(Session, DeregisteredBobLosesRoute) {
  Network n = Network::build(four_chain(9));
  auto s = spec(5000);
  s.faults.deregister_bob = true;
  const auto r = run_session(n, s);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.failure, FailureKind::RouteLost);
}

TEST(Session, DecliningBobIsRefused) {
  NetworkConfig c = four_chain(10);
  c.nodes[3].declines = true;
  Network n = Network::build(c);
  const auto r = run_session(n, spec(1000));
  EXPECT_EQ(r.failure, FailureKind::Refused);
}

TEST(Session, TamperedBasisAnnouncementRaisesAlarm) {
  NetworkConfig c = four_chain(11);
  c.adversaries.push_back({AdversaryKind::Tamper, NodePair::of("bob", "carol2"), 1.0, PayloadType::BasisAnnounce, 1});
  Network n = Network::build(c);
  const auto r = run_session(n, spec(5000));
  EXPECT_EQ(r.failure, FailureKind::TamperAlarm);
  EXPECT_GT(r.altered_envelopes, 0u);
  EXPECT_EQ(r.forgeries_accepted, 0u);
}

TEST(Session, InjectedForgeriesAreAllRejected) {
  NetworkConfig c = four_chain(12);
  c.adversaries.push_back({AdversaryKind::Inject, NodePair::of("carol1", "carol2"), 1.0, PayloadType::BasisAnnounce, 20});
  Network n = Network::build(c);
  const auto r = run_session(n, spec(5000));
  EXPECT_GT(r.forgeries_attempted, 0u);
  EXPECT_EQ(r.forgeries_accepted, 0u);
}

TEST(Multiplex, QubitByQubitAttributesPoolTrafficPerSession) {
  NetworkConfig c = four_chain(13);
  c.nodes.push_back(endpoint("dave", "carol1"));
  Network n = Network::build(c);
  SessionSpec s1 = spec(20000);
  SessionSpec s2 = spec(10000);
  s2.id = 2;
  s2.bob = "dave";
  const std::vector<SessionSpec> both{s1, s2};
  const auto m = multiplex_sessions(n, both, MultiplexPolicy::QubitByQubit);
  ASSERT_EQ(m.sessions.size(), 2u);
  EXPECT_EQ(m.order.size(), 30000u);
  EXPECT_EQ(m.order[0], 1u);
  EXPECT_EQ(m.order[1], 2u);
  for (const auto& r : m.sessions) EXPECT_TRUE(r.success) << r.failure_detail;
  // Dave's session never touches carol1-carol2.
  for (const auto& p : m.sessions[1].pools) EXPECT_NE(p.pair, NodePair::of("carol1", "carol2"));
  // Totals match the pools' own counters.
  std::map<NodePair, std::size_t> consumed;
  for (const auto& r : m.sessions)
    for (const auto& p : r.pools) consumed[p.pair] += p.consumed();
  const Network fresh = Network::build(c);
  for (const auto& [pair, bits] : consumed) {
    const auto before =
        fresh.auth().pools.has(pair.first, pair.second) ? fresh.auth().pools.view(pair.first, pair.second).consumed_offset() : 0;
    EXPECT_EQ(n.auth().pools.view(pair.first, pair.second).consumed_offset() - before, bits) << pair.label();
  }
}

TEST(Multiplex, QubitByQubitNeedsSharedAlice) {
  NetworkConfig c = four_chain(14);
  c.nodes.push_back(endpoint("dave", "carol1"));
  Network n = Network::build(c);
  SessionSpec s1 = spec(1000);
  SessionSpec s2 = spec(1000);
  s2.id = 2;
  s2.alice = "dave";
  const std::vector<SessionSpec> both{s1, s2};
  EXPECT_THROW(multiplex_sessions(n, both, MultiplexPolicy::QubitByQubit), Error);
}

TEST(Multiplex, RunByRunMatchesSequentialSessions) {
  const std::vector<SessionSpec> two{spec(3000), [] {
                                       auto s = spec(3000);
                                       s.id = 2;
                                       return s;
                                     }()};
  Network a = Network::build(four_chain(15));
  const auto m = multiplex_sessions(a, two, MultiplexPolicy::RunByRun);
  Network b = Network::build(four_chain(15));
  const auto r1 = run_session(b, two[0]);
  const auto r2 = run_session(b, two[1]);
  EXPECT_EQ(m.sessions[0].secret_key, r1.secret_key);
  EXPECT_EQ(m.sessions[1].secret_key, r2.secret_key);
}

TEST(Names, FailureKindsRoundTrip) {
  for (int i = 0; i <= static_cast<int>(FailureKind::Malformed); ++i) {
    const auto k = static_cast<FailureKind>(i);
    EXPECT_EQ(parse_failure_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_multiplex(to_string(MultiplexPolicy::QubitByQubit)), MultiplexPolicy::QubitByQubit);
  EXPECT_EQ(parse_adversary_kind(to_string(AdversaryKind::PassiveTap)), AdversaryKind::PassiveTap);
}
