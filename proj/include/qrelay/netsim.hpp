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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrelay/auth.hpp"
#include "qrelay/error.hpp"
#include "qrelay/event_loop.hpp"
#include "qrelay/protocol.hpp"
#include "qrelay/quantum.hpp"
#include "qrelay/routing.hpp"
#include "qrelay/types.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

enum class NodeRole { Endpoint, Relay };
std::string_view to_string(NodeRole r);

struct NodeConfig {
  NodeId id;
  NodeRole role = NodeRole::Endpoint;
  Capabilities capabilities;
  /// Endpoints list exactly one Carol, relays none.
  std::vector<NodeId> attachments;
  /// Answers every session request with a decline.
  bool declines = false;

  bool operator==(const NodeConfig&) const = default;
};

struct Node {
  NodeId id;
  NodeRole role = NodeRole::Endpoint;
  Capabilities capabilities;
  NodeId attachment;
  bool declines = false;
};

enum class LinkKind { Quantum, Classical };
std::string_view to_string(LinkKind k);

enum class AdversaryKind { EveInterceptResend, PassiveTap, Tamper, Inject };
std::string_view to_string(AdversaryKind k);
std::optional<AdversaryKind> parse_adversary_kind(std::string_view s);

struct AdversaryModel {
  AdversaryKind kind = AdversaryKind::EveInterceptResend;
  NodePair link;
  /// Per-round (quantum) or per-message (classical) probability of acting.
  double fraction = 1.0;
  /// Classical attacks act only on this payload type when set.
  std::optional<PayloadType> target;
  /// Forgeries per targeted message (Inject only).
  std::size_t attempts = 1;

  bool operator==(const AdversaryModel&) const = default;
};

struct Link {
  NodePair endpoints;
  LinkKind kind = LinkKind::Quantum;
  NoiseModel noise;
  std::vector<AdversaryModel> adversaries;
};

struct LinkNoise {
  NodePair link;
  double flip_probability = 0.0;

  bool operator==(const LinkNoise&) const = default;
};

struct NetworkConfig {
  std::uint64_t seed = 1;
  std::vector<NodeConfig> nodes;
  double default_noise = 0.0;
  std::vector<LinkNoise> link_noise;
  AuthParams auth;
  /// Bits pre-shared on every star and mesh edge before the first session.
  std::size_t initial_pool_bits = 262144;
  /// Size of each out-of-band key slip under out_of_band_preshared.
  std::size_t preshared_bits = 4096;
  std::vector<AdversaryModel> adversaries;

  bool operator==(const NetworkConfig&) const = default;
};

class Transcript {
 public:
  void append(std::string line) { lines_.push_back(std::move(line)); }
  void extend(const Transcript& other) {
    lines_.insert(lines_.end(), other.lines_.begin(), other.lines_.end());
  }
  const std::vector<std::string>& lines() const noexcept { return lines_; }
  std::size_t size() const noexcept { return lines_.size(); }
  /// One record per line, each line terminated by '\n'.
  std::string str() const;

 private:
  std::vector<std::string> lines_;
};

/// Star-of-stars network: every endpoint hangs off one Carol and the Carols
/// form a full mesh. Each edge carries one quantum and one classical link.
class Network {
 public:
  /// Throws ValidationError listing every problem in the configuration.
  static Network build(const NetworkConfig& config);

  const NetworkConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return config_.seed; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(const NodeId& id) const;
  bool has_node(const NodeId& id) const;
  const std::vector<Link>& links() const noexcept { return links_; }
  const Link* link(const NodeId& a, const NodeId& b, LinkKind kind) const;
  std::size_t link_count(LinkKind kind) const;

  ControlPlane& control() noexcept { return control_; }
  const ControlPlane& control() const noexcept { return control_; }
  AuthDomain& auth() noexcept { return auth_; }
  const AuthDomain& auth() const noexcept { return auth_; }
  EventLoop& loop() noexcept { return loop_; }

  /// Records written while building: topology and the initial table flood.
  const Transcript& setup_transcript() const noexcept { return setup_; }
  const PropagationStats& setup_propagation() const noexcept { return setup_stats_; }

  /// Removes an endpoint and floods the change over the mesh.
  PropagationStats deregister(const NodeId& endpoint);

 private:
  Network() = default;

  NetworkConfig config_;
  std::vector<Node> nodes_;
  std::map<NodeId, std::size_t> index_;
  std::vector<Link> links_;
  ControlPlane control_;
  AuthDomain auth_;
  EventLoop loop_;
  Transcript setup_;
  PropagationStats setup_stats_;
};

/// Every problem with the configuration, located by JSON pointer into the scenario file.
std::vector<Violation> validate_network(const NetworkConfig& config);

/// Same as Network::build.
Network build_network(const NetworkConfig& config);

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

/// Injected relay misbehavior and faults for one session.
struct SessionFaults {
  /// The named relay secretly forwards qubits through `detour_via` before the next hop.
  std::optional<NodeId> detour_after;
  std::optional<NodeId> detour_via;
  /// This relay handles qubits but never announces its bases.
  std::optional<NodeId> silent_relay;
  /// Bob is deregistered after the quantum phase.
  bool deregister_bob = false;

  bool operator==(const SessionFaults&) const = default;
};

struct SessionSpec {
  std::uint64_t id = 1;
  NodeId alice;
  NodeId bob;
  std::size_t rounds = 10000;
  AuthScheme scheme = AuthScheme::RelayMediated;
  BootstrapPolicy policy = BootstrapPolicy::TrustCarolAlways;
  double final_key_reserve = 0.1;
  double qber_threshold = 0.11;
  double sample_fraction = 0.25;
  ReconciliationParams reconciliation;
  SessionFaults faults;
  /// Keep every RoundRecord in the result (tests and bindings).
  bool keep_records = false;

  bool operator==(const SessionSpec&) const = default;
};

enum class FailureKind {
  None,
  QberAbort,
  ReconciliationAbort,
  TamperAlarm,
  KeyExhaustion,
  NoKey,
  RouteLost,
  RouteMismatch,
  Refused,
  Capability,
  NotFound,
  Malformed,
};
std::string_view to_string(FailureKind k);
std::optional<FailureKind> parse_failure_kind(std::string_view s);

struct PairSummary {
  NodePair pair;
  PositionPair positions;
  PairOutcome outcome = PairOutcome::Ok;
  std::size_t rounds = 0;
  double qber_estimate = 0.0;
  double sifted_qber = 0.0;
  std::size_t leakage_bits = 0;
  KeyAccounting accounting;
};

/// Pool traffic attributed to one session. Only the stretches where the session
/// itself touches the pools count, so interleaved sessions do not mix.
struct PoolDelta {
  NodePair pair;
  /// Key bits spent on tags by this session.
  std::size_t consumed_bits = 0;
  /// Bits this session appended.
  std::size_t growth_bits = 0;
  /// Pool state when the session ended.
  std::size_t bits_after = 0;
  std::size_t consumed_after = 0;

  std::size_t consumed() const noexcept { return consumed_bits; }
  std::size_t growth() const noexcept { return growth_bits; }
};

struct ShadowSummary {
  NodeId carol;
  ShadowReport report;
};

struct SessionResult {
  SessionSpec spec;
  AuthScheme scheme = AuthScheme::RelayMediated;
  BootstrapDecision bootstrap;
  Route route;
  /// Chain the qubits actually followed, transmitter first.
  std::vector<NodeId> physical;
  bool quantum_reversed = false;

  bool success = false;
  FailureKind failure = FailureKind::None;
  std::string failure_phase;
  std::string failure_detail;

  std::size_t used_rounds = 0;
  std::size_t unused_rounds = 0;
  std::map<NodePair, std::size_t> group_counts;
  std::vector<PairSummary> pairs;
  std::map<NodePair, Bits> pair_keys;
  Bits secret_key;
  std::vector<PoolRefresh> refresh;
  std::vector<PoolDelta> pools;
  RateReport rates;
  std::vector<NodeId> announcers;
  std::optional<RouteCheck> route_check;
  std::vector<ShadowSummary> shadows;

  std::size_t envelopes = 0;
  std::size_t forgeries_attempted = 0;
  std::size_t forgeries_accepted = 0;
  std::size_t altered_envelopes = 0;
  std::size_t tapped_envelopes = 0;

  std::vector<RoundRecord> records;
  Transcript transcript;
};

/// Establishes the session and runs every phase, recording each step. A phase
/// failure ends the session with a classified failure record.
SessionResult run_session(Network& network, const SessionSpec& spec);

enum class MultiplexPolicy { RunByRun, QubitByQubit };
std::string_view to_string(MultiplexPolicy p);
std::optional<MultiplexPolicy> parse_multiplex(std::string_view s);

struct MultiplexResult {
  MultiplexPolicy policy = MultiplexPolicy::RunByRun;
  /// Session ids in execution order; one entry per quantum round for qubit by qubit.
  std::vector<std::uint64_t> order;
  std::vector<SessionResult> sessions;
  Transcript transcript;
};

/// RunByRun executes sessions to completion one after another. QubitByQubit
/// establishes every session, interleaves their quantum rounds round-robin and
/// then finishes each; its sessions must share one Alice.
MultiplexResult multiplex_sessions(Network& network, std::span<const SessionSpec> sessions,
                                   MultiplexPolicy policy);

// ---------------------------------------------------------------------------
// Transcript replay
// ---------------------------------------------------------------------------

struct ReplayIssue {
  std::size_t record = 0;
  std::string type;
  std::string message;
};

struct ReplayReport {
  bool well_formed = true;
  std::size_t records = 0;
  std::size_t tag_checks = 0;
  std::size_t sift_checks = 0;
  std::size_t accounting_checks = 0;
  std::vector<ReplayIssue> issues;

  bool ok() const noexcept { return well_formed && issues.empty(); }
};

/// Re-runs sifting, tag verification from the recorded key segments and the
/// accounting sums, and compares with what the transcript says happened.
ReplayReport replay_transcript(std::string_view jsonl);

}  // namespace qrelay
